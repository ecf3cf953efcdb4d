// SPDX-License-Identifier: Apache-2.0
#include "psdeob/ioc.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace psdeob {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_ipv4(std::string_view host) {
  int parts = 0;
  std::size_t i = 0;
  while (i <= host.size()) {
    std::size_t j = host.find('.', i);
    if (j == std::string_view::npos) j = host.size();
    auto part = host.substr(i, j - i);
    if (part.empty() || part.size() > 3) return false;
    int v = 0;
    for (char c : part) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return false;
      v = v * 10 + (c - '0');
    }
    if (v > 255) return false;
    ++parts;
    i = j + 1;
  }
  return parts == 4;
}

bool is_dns_name(std::string_view host) {
  if (host.empty() || host.size() > 253) return false;
  std::size_t labels = 0;
  std::string_view last;
  std::size_t i = 0;
  while (i <= host.size()) {
    std::size_t j = host.find('.', i);
    if (j == std::string_view::npos) j = host.size();
    auto label = host.substr(i, j - i);
    if (label.empty() || label.size() > 63) return false;
    if (label.front() == '-' || label.back() == '-') return false;
    for (char c : label) {
      auto u = static_cast<unsigned char>(c);
      if (!(std::isalnum(u) || c == '-')) return false;
    }
    ++labels;
    last = label;
    i = j + 1;
  }
  if (labels < 2) return false;
  // an all-numeric final label is a malformed address, not a TLD
  return !std::all_of(last.begin(), last.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Static: return "static";
    case Provenance::Llm: return "llm";
    case Provenance::Merged: return "merged";
  }
  return "static";
}

std::optional<std::string> validate_url(std::string_view candidate) {
  while (!candidate.empty() && is_space(candidate.front())) candidate.remove_prefix(1);
  while (!candidate.empty() && is_space(candidate.back())) candidate.remove_suffix(1);
  if (std::any_of(candidate.begin(), candidate.end(), is_space)) return std::nullopt;

  auto scheme_end = candidate.find("://");
  if (scheme_end == std::string_view::npos) return std::nullopt;
  std::string scheme = lower(candidate.substr(0, scheme_end));
  if (scheme != "http" && scheme != "https") return std::nullopt;

  auto rest = candidate.substr(scheme_end + 3);
  auto authority_end = rest.find_first_of("/?#");
  auto authority = rest.substr(0, authority_end);
  auto tail = authority_end == std::string_view::npos ? std::string_view{} : rest.substr(authority_end);
  if (authority.find('@') != std::string_view::npos) return std::nullopt;
  if (authority.find('[') != std::string_view::npos) return std::nullopt;  // IPv6

  std::string_view host = authority;
  std::string_view port;
  if (auto colon = authority.find(':'); colon != std::string_view::npos) {
    host = authority.substr(0, colon);
    port = authority.substr(colon + 1);
    if (port.empty() || port.size() > 5) return std::nullopt;
    if (!std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return std::nullopt;
    if (std::stoi(std::string(port)) > 65535) return std::nullopt;
  }
  std::string lhost = lower(host);
  if (!is_ipv4(lhost) && !is_dns_name(lhost)) return std::nullopt;

  std::string out = scheme + "://" + lhost;
  if (!port.empty()) out += ":" + std::string(port);
  out += tail;
  return out;
}

std::string url_to_domain(std::string_view url, bool fold_www) {
  auto start = url.find("://");
  start = start == std::string_view::npos ? 0 : start + 3;
  auto rest = url.substr(start);
  auto host = rest.substr(0, rest.find_first_of(":/?#"));
  std::string out = lower(host);
  if (fold_www && out.rfind("www.", 0) == 0 && out.size() > 4) out.erase(0, 4);
  return out;
}

ExtractionResult make_extraction(const std::vector<std::string>& candidates, Provenance provenance,
                                 const IocOptions& options) {
  ExtractionResult r;
  r.provenance = provenance;
  std::set<std::string> seen_urls;
  std::set<std::string> seen_domains;
  for (const auto& c : candidates) {
    auto url = validate_url(c);
    if (!url || !seen_urls.insert(*url).second) continue;
    r.urls.push_back(*url);
    auto domain = url_to_domain(*url, options.fold_www);
    if (seen_domains.insert(domain).second) r.domains.push_back(domain);
  }
  return r;
}

std::vector<std::string> urls_in_text(std::string_view text, const IocOptions& options) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t j = text.find_first_of(options.separators, i);
    if (j == std::string_view::npos) j = text.size();
    if (auto url = validate_url(text.substr(i, j - i))) out.push_back(*url);
    i = j + 1;
  }
  return out;
}

ExtractionResult extract_urls(const DeobResult& result, const IocOptions& options) {
  const auto& env = result.folded_env;
  std::vector<std::string> from_lists;
  for (const auto& name : env.order()) {
    const Value* v = env.find(name);
    if (!v || v->kind != ValueKind::TextList) continue;
    for (const auto& item : v->items)
      for (auto& url : urls_in_text(item, options)) from_lists.push_back(std::move(url));
  }
  if (!from_lists.empty()) return make_extraction(from_lists, Provenance::Static, options);

  // Longest string first; stable sort keeps first-seen order among equals.
  std::vector<const std::string*> pool;
  for (const auto& s : result.string_pool) pool.push_back(&s);
  std::stable_sort(pool.begin(), pool.end(),
                   [](const std::string* a, const std::string* b) { return a->size() > b->size(); });
  for (const auto* s : pool) {
    auto urls = urls_in_text(*s, options);
    if (!urls.empty()) return make_extraction(urls, Provenance::Static, options);
  }
  ExtractionResult r;
  if (!pool.empty()) r.longest_string = *pool.front();
  return r;
}

}  // namespace psdeob
