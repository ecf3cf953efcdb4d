// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psdeob/partial_eval.hpp"

namespace psdeob {

enum class Provenance { Static, Llm, Merged };

std::string_view to_string(Provenance p);

struct ExtractionResult {
  std::vector<std::string> urls;     // normalized, unique, in discovery order
  std::vector<std::string> domains;  // unique hosts of `urls`
  Provenance provenance = Provenance::Static;
  std::optional<std::string> longest_string;
};

struct IocOptions {
  /// Treat "www.x.com" and "x.com" as the same domain.
  bool fold_www = false;
  /// Characters a URL blob is split on.
  std::string separators = "@*";
};

/// Accepts http(s) URLs whose host is a dotted DNS name or IPv4 literal.
/// Lowercases scheme and host; the rest is kept as written.
std::optional<std::string> validate_url(std::string_view candidate);

/// Host of a normalized URL, port removed.
std::string url_to_domain(std::string_view url, bool fold_www = false);

/// Validates, deduplicates and derives domains.
ExtractionResult make_extraction(const std::vector<std::string>& candidates, Provenance provenance,
                                 const IocOptions& options = {});

/// Splits `text` on the separators and keeps the pieces that validate.
std::vector<std::string> urls_in_text(std::string_view text, const IocOptions& options = {});

ExtractionResult extract_urls(const DeobResult& result, const IocOptions& options = {});

}  // namespace psdeob
