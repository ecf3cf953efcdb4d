// SPDX-License-Identifier: Apache-2.0
#include "psdeob/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "psdeob/error.hpp"
#include "psdeob/ioc.hpp"
#include "psdeob/lexer.hpp"
#include "psdeob/parser.hpp"
#include "psdeob/partial_eval.hpp"

namespace psdeob {

using json = nlohmann::json;

namespace {

constexpr std::string_view kDeobfSystem =
    "You are a malware analyst. Your job is to find URLs in obfuscated code. Follow the "
    "instructions. Do not provide any explanations. Encode your responses as JSON.";

constexpr std::string_view kInstSystem =
    "Follow the instructions. Do not provide any explanations. Encode your responses as JSON. "
    "Your responses must start with ```json and end with ```.";

constexpr std::string_view kDeobfUser =
    "Simplify the attached powershell code before the loop. Remove the code after the loop. "
    "There are some lines with dead code, many strings are broken down to shorter ones. Process "
    "the resulting strings using concatenation and replacements, making the necessary "
    "evaluations. You will often find short strings adjacent with the plus sign, concatenate "
    "them. Then look for additions of parentheses with strings. Concatenate them too. Replace "
    "unicode characters. Now try to deobfuscate the code. There are URLs concatenated in a "
    "string which must be split with the same character, e.g., *,@. All URLS start with http or "
    "https. Return the URLs that you will find in the longest string after the operation within "
    "a json without any additional text. If you don't find URLs, return the longest string using "
    "the key kk in the returned json removing space characters and split it using * or @. The "
    "code is: ```\n{{CODE}}\n```";

constexpr std::string_view kCtiSystem =
    "You are a malware analyst. Your job is to understand what a malicious powershell script "
    "does. Do not provide any explanations. Encode your responses as JSON.";

constexpr std::string_view kCtiUser =
    "Suppress all output and return only a JSON which contains the description of what the "
    "following powershell script does and the mitre att&ck methods that it uses. For each method "
    "return only the ID and the name. The code is: ```\n{{CODE}}\n```";

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Curly apostrophes are common in model output.
std::string fold_apostrophes(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.substr(i, 3) == "’" || s.substr(i, 3) == "‘") {
      out += '\'';
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string strip_fences(std::string_view raw) {
  auto open = raw.find("```");
  if (open == std::string_view::npos) return trim(raw);
  auto body_start = raw.find('\n', open);
  if (body_start == std::string_view::npos) return trim(raw);
  ++body_start;
  auto close = raw.find("```", body_start);
  if (close == std::string_view::npos) return trim(raw.substr(body_start));
  return trim(raw.substr(body_start, close - body_start));
}

json parse_lenient(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (!j.is_discarded()) return j;
  auto first = text.find_first_of("[{");
  auto last = text.find_last_of("]}");
  if (first == std::string::npos || last == std::string::npos || last < first) return j;
  return json::parse(text.substr(first, last - first + 1), nullptr, false);
}

bool all_strings(const json& arr) {
  return std::all_of(arr.begin(), arr.end(), [](const json& x) { return x.is_string(); });
}

}  // namespace

std::string_view to_string(PromptStyle s) {
  return s == PromptStyle::SystemUser ? "system-user" : "inst-sys";
}

PromptStyle parse_prompt_style(std::string_view s) {
  if (s == "system-user") return PromptStyle::SystemUser;
  if (s == "inst-sys") return PromptStyle::InstSys;
  throw ConfigError("unknown prompt style '" + std::string(s) + "'");
}

std::string_view to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::UrlList: return "url-list";
    case AnswerKind::LongestString: return "longest-string";
    case AnswerKind::Cti: return "cti";
    case AnswerKind::Refusal: return "refusal";
    case AnswerKind::Malformed: return "malformed";
  }
  return "malformed";
}

const PromptTemplate& deobf_template(PromptStyle style) {
  static const PromptTemplate system_user{PromptStyle::SystemUser, std::string(kDeobfSystem),
                                          std::string(kDeobfUser)};
  static const PromptTemplate inst_sys{PromptStyle::InstSys, std::string(kInstSystem),
                                       std::string(kDeobfUser)};
  return style == PromptStyle::SystemUser ? system_user : inst_sys;
}

const PromptTemplate& cti_template() {
  static const PromptTemplate t{PromptStyle::SystemUser, std::string(kCtiSystem), std::string(kCtiUser)};
  return t;
}

std::size_t Prompt::size() const {
  std::size_t n = 0;
  for (const auto& m : messages) n += m.content.size();
  return n;
}

Prompt render_prompt(const PromptTemplate& tmpl, std::string_view code, std::size_t max_chars) {
  if (code.empty()) throw std::invalid_argument("prompt code must not be empty");
  std::string user = tmpl.user_text_with_code_slot;
  auto slot = user.find(kCodeSlot);
  user.replace(slot, kCodeSlot.size(), code);
  Prompt p;
  if (tmpl.style == PromptStyle::SystemUser) {
    p.messages.push_back({"system", tmpl.system_text});
    p.messages.push_back({"user", std::move(user)});
  } else {
    p.messages.push_back(
        {"user", "[INST]\n<<SYS>>\n" + tmpl.system_text + "\n<</SYS>>\n" + user + "\n[/INST]"});
  }
  if (p.size() > max_chars) throw PromptTooLarge(p.size(), max_chars);
  return p;
}

Prompt build_deobf_prompt(std::string_view code, PromptStyle style, std::size_t max_chars) {
  return render_prompt(deobf_template(style), code, max_chars);
}

Prompt build_cti_prompt(std::string_view code, std::size_t max_chars) {
  return render_prompt(cti_template(), code, max_chars);
}

std::string prompt_to_text(const Prompt& prompt) {
  std::string out;
  for (const auto& m : prompt.messages) out += "### " + m.role + "\n" + m.content + "\n";
  return out;
}

std::string shorten_variable_names(std::string_view code) {
  std::vector<Token> toks;
  try {
    toks = tokenize(code);
  } catch (const LexError&) {
    return std::string(code);
  }
  std::set<std::string> in_strings;
  for (const auto& t : toks)
    for (const auto& p : t.parts)
      if (p.is_variable) in_strings.insert(canonical_var_name(p.text));
  std::map<std::string, std::string> names;
  std::string out;
  std::size_t last = 0;
  for (const auto& t : toks) {
    if (t.kind != TokenKind::Variable) continue;
    auto canon = canonical_var_name(t.text);
    if (canon.size() <= 3 || in_strings.count(canon) || is_automatic_variable(canon)) continue;
    auto [it, fresh] = names.try_emplace(canon, "");
    if (fresh) it->second = "$v" + std::to_string(names.size() - 1);
    out.append(code.substr(last, t.span.start - last));
    out += it->second;
    last = t.span.end;
  }
  out.append(code.substr(last));
  return out;
}

std::string reduce_script(std::string_view code, std::size_t target_chars) {
  std::string stage(code);
  if (stage.size() <= target_chars) return stage;
  stage = strip_comments(stage);
  if (stage.size() <= target_chars) return stage;
  return shorten_variable_names(stage);
}

const std::vector<std::string>& default_refusal_patterns() {
  static const std::vector<std::string> p = {"I'm sorry, I cannot", "I'm designed solely to process"};
  return p;
}

bool classify_refusal(std::string_view raw, const std::vector<std::string>& patterns) {
  const std::string hay = ascii_lower(fold_apostrophes(raw));
  return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
    return !p.empty() && hay.find(ascii_lower(fold_apostrophes(p))) != std::string::npos;
  });
}

bool is_technique_id(std::string_view id) {
  if (id.size() < 2 || id[0] != 'T') return false;
  std::size_t i = 1;
  auto digits = [&] {
    std::size_t start = i;
    while (i < id.size() && std::isdigit(static_cast<unsigned char>(id[i]))) ++i;
    return i > start;
  };
  if (!digits()) return false;
  if (i == id.size()) return true;
  if (id[i] != '.') return false;
  ++i;
  return digits() && i == id.size();
}

LlmAnswer parse_json_response(std::string_view raw, Expected expected,
                              const std::vector<std::string>& refusal_patterns) {
  LlmAnswer a;
  a.raw_text = std::string(raw);
  try {
    for (const auto& p : refusal_patterns) {
      if (classify_refusal(raw, {p})) {
        a.kind = AnswerKind::Refusal;
        a.reason = p;
        return a;
      }
    }
    json j = parse_lenient(strip_fences(raw));
    if (j.is_discarded()) {
      a.reason = "not JSON";
      return a;
    }
    if (expected == Expected::Deobf) {
      const json* list = nullptr;
      if (j.is_array()) {
        list = &j;
      } else if (j.is_object()) {
        if (auto kk = j.find("kk"); kk != j.end() && kk->is_string()) {
          a.kind = AnswerKind::LongestString;
          a.longest = kk->get<std::string>();
          return a;
        }
        for (const auto& [key, value] : j.items())
          if (value.is_array() && all_strings(value)) {
            list = &value;
            break;
          }
      }
      if (!list || !all_strings(*list)) {
        a.reason = "no URL array";
        return a;
      }
      for (const auto& x : *list)
        if (auto url = validate_url(x.get<std::string>())) a.urls.push_back(*url);
      a.kind = AnswerKind::UrlList;
      return a;
    }
    if (!j.is_object() || !j.contains("description") || !j["description"].is_string() ||
        !j.contains("mitre_attack_methods") || !j["mitre_attack_methods"].is_array()) {
      a.reason = "missing description or mitre_attack_methods";
      return a;
    }
    CtiAnswer cti;
    cti.description = j["description"].get<std::string>();
    std::set<std::string> ids;
    for (const auto& m : j["mitre_attack_methods"]) {
      if (!m.is_object() || !m.contains("ID") || !m.contains("name") || !m["ID"].is_string() ||
          !m["name"].is_string()) {
        a.reason = "method entry without ID and name";
        return a;
      }
      auto id = m["ID"].get<std::string>();
      auto name = m["name"].get<std::string>();
      if (!is_technique_id(id) || name.empty()) {
        a.reason = "bad technique id '" + id + "'";
        return a;
      }
      if (ids.insert(id).second) cti.methods.push_back({id, name});
    }
    a.kind = AnswerKind::Cti;
    a.cti = std::move(cti);
    return a;
  } catch (const std::exception& e) {
    a.kind = AnswerKind::Malformed;
    a.reason = e.what();
    return a;
  }
}

// --- configuration -----------------------------------------------------------

namespace {

void apply_env(LlmConfig& c) {
  if (const char* key = std::getenv(kApiKeyEnv)) c.api_key = key;
  if (const char* ep = std::getenv(kEndpointEnv); ep && *ep) c.endpoint = ep;
}

void validate(const LlmConfig& c) {
  if (c.temperature < 0) throw ConfigError("temperature must be >= 0");
  if (c.retries < 0) throw ConfigError("retries must be >= 0");
  if (c.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (c.timeout_s <= 0) throw ConfigError("timeout_s must be > 0");
  if (c.endpoint.find("://") == std::string::npos) throw ConfigError("endpoint must be an http(s) URL");
}

}  // namespace

LlmConfig llm_config_from_env() {
  LlmConfig c;
  apply_env(c);
  validate(c);
  return c;
}

LlmConfig parse_llm_config(std::string_view json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("LLM config must be a JSON object");
  LlmConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "api_key")
        throw ConfigError(std::string("api keys are read from ") + kApiKeyEnv + ", not from config files");
      else if (key == "endpoint") c.endpoint = value.get<std::string>();
      else if (key == "model") c.model = value.get<std::string>();
      else if (key == "temperature") c.temperature = value.get<double>();
      else if (key == "max_tokens") c.max_tokens = value.get<int>();
      else if (key == "timeout_s") c.timeout_s = value.get<double>();
      else if (key == "retries") c.retries = value.get<int>();
      else if (key == "backoff_initial_s") c.backoff_initial_s = value.get<double>();
      else if (key == "max_chars") c.max_chars = value.get<std::size_t>();
      else if (key == "max_in_flight") c.max_in_flight = value.get<std::size_t>();
      else if (key == "style") c.style = parse_prompt_style(value.get<std::string>());
      else if (key == "refusal_patterns") c.refusal_patterns = value.get<std::vector<std::string>>();
      else throw ConfigError("unknown LLM config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad LLM config value: ") + e.what());
  }
  apply_env(c);
  validate(c);
  return c;
}

LlmConfig load_llm_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read LLM config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_llm_config(ss.str());
}

std::string request_body(const Prompt& prompt, const LlmConfig& config) {
  json messages = json::array();
  for (const auto& m : prompt.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", config.model},
               {"messages", std::move(messages)},
               {"temperature", config.temperature},
               {"max_tokens", config.max_tokens}};
  return body.dump();
}

// --- transport ---------------------------------------------------------------

LlmClient::LlmClient(LlmConfig config) : config_(std::move(config)) {
  validate(config_);
  auto scheme_end = config_.endpoint.find("://");
  auto path_start = config_.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = config_.endpoint;
    path_ = "/v1/chat/completions";
  } else {
    base_ = config_.endpoint.substr(0, path_start);
    path_ = config_.endpoint.substr(path_start);
  }
}

std::size_t LlmClient::request_count() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::string LlmClient::attempt(const std::string& body, int& status) {
  httplib::Client cli(base_);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
  {
    std::lock_guard lock(mu_);
    ++requests_;
  }
  auto res = cli.Post(path_, headers, body, "application/json");
  if (!res) {
    status = -1;
    return httplib::to_string(res.error());
  }
  status = res->status;
  return res->body;
}

std::string LlmClient::complete(const Prompt& prompt) {
  {
    std::unique_lock lock(mu_);
    slot_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
    ++in_flight_;
  }
  struct Release {
    LlmClient* c;
    ~Release() {
      {
        std::lock_guard lock(c->mu_);
        --c->in_flight_;
      }
      c->slot_.notify_one();
    }
  } release{this};

  const std::string body = request_body(prompt, config_);
  bool rate_limited = false;
  std::string last_error;
  for (int i = 0; i <= config_.retries; ++i) {
    int status = 0;
    std::string text = attempt(body, status);
    if (status >= 200 && status < 300) {
      json j = json::parse(text, nullptr, false);
      if (!j.is_discarded() && j.is_object() && j.contains("choices")) {
        try {
          return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception&) {
          throw TransportError("chat response without message content");
        }
      }
      return text;
    }
    if (status == 401 || status == 403)
      throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    if (status == 429) {
      rate_limited = true;
      last_error = "HTTP 429";
    } else if (status < 0 || status >= 500) {
      rate_limited = false;
      last_error = status < 0 ? text : "HTTP " + std::to_string(status);
    } else {
      throw TransportError("HTTP " + std::to_string(status) + ": " + text.substr(0, 200));
    }
    if (i < config_.retries) {
      auto delay = config_.backoff_initial_s * std::pow(2.0, i);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
  if (rate_limited) throw RateLimited("rate limited after " + std::to_string(config_.retries + 1) + " attempts");
  throw TransportError("request failed after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

}  // namespace psdeob
