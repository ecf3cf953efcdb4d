// SPDX-License-Identifier: Apache-2.0
//
// Prompt construction, a chat-completion HTTP client and answer parsing.
#pragma once

#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace psdeob {

enum class PromptStyle { SystemUser, InstSys };

std::string_view to_string(PromptStyle s);
PromptStyle parse_prompt_style(std::string_view s);  // throws ConfigError

/// Marks where the script goes in a template's user text.
inline constexpr std::string_view kCodeSlot = "{{CODE}}";

struct PromptTemplate {
  PromptStyle style = PromptStyle::SystemUser;
  std::string system_text;
  std::string user_text_with_code_slot;
};

const PromptTemplate& deobf_template(PromptStyle style);
const PromptTemplate& cti_template();

struct ChatMessage {
  std::string role;
  std::string content;
  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct Prompt {
  std::vector<ChatMessage> messages;
  /// Total characters over all message contents.
  std::size_t size() const;
};

inline constexpr std::size_t kDefaultMaxChars = 24000;

/// Fills the code slot. Throws PromptTooLarge when the result is over
/// `max_chars`, and std::invalid_argument for empty code.
Prompt render_prompt(const PromptTemplate& tmpl, std::string_view code,
                     std::size_t max_chars = kDefaultMaxChars);
Prompt build_deobf_prompt(std::string_view code, PromptStyle style,
                          std::size_t max_chars = kDefaultMaxChars);
Prompt build_cti_prompt(std::string_view code, std::size_t max_chars = kDefaultMaxChars);

/// Plain-text dump of a prompt ("### role" header per message).
std::string prompt_to_text(const Prompt& prompt);

/// Shrinks a script that does not fit: comments are removed first, then long
/// variable names are replaced by $v0, $v1, ... Returns the smallest stage.
std::string reduce_script(std::string_view code, std::size_t target_chars);

/// Renames variables to $v0, $v1, ... in order of first appearance.
/// Variables also referenced inside expandable strings keep their names.
std::string shorten_variable_names(std::string_view code);

const std::vector<std::string>& default_refusal_patterns();

struct LlmConfig {
  std::string endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string model = "gpt-4-1106-preview";
  double temperature = 0.0;
  int max_tokens = 2048;
  double timeout_s = 120.0;
  int retries = 2;
  double backoff_initial_s = 0.5;
  std::size_t max_chars = kDefaultMaxChars;
  std::size_t max_in_flight = 4;
  PromptStyle style = PromptStyle::SystemUser;
  std::vector<std::string> refusal_patterns = default_refusal_patterns();
  std::string api_key;  // environment only
};

inline constexpr const char* kApiKeyEnv = "PSDEOB_LLM_API_KEY";
inline constexpr const char* kEndpointEnv = "PSDEOB_LLM_ENDPOINT";

/// Defaults overlaid with the environment.
LlmConfig llm_config_from_env();
/// JSON config file overlaid with the environment. An "api_key" entry or an
/// unknown key is a ConfigError.
LlmConfig load_llm_config(const std::filesystem::path& path);
LlmConfig parse_llm_config(std::string_view json_text);

/// JSON body of a chat-completion request.
std::string request_body(const Prompt& prompt, const LlmConfig& config);

class LlmClient {
 public:
  explicit LlmClient(LlmConfig config);

  /// Sends the prompt and returns the assistant text. Throws AuthError,
  /// RateLimited or TransportError.
  std::string complete(const Prompt& prompt);

  const LlmConfig& config() const { return config_; }
  std::size_t request_count() const;

 private:
  std::string attempt(const std::string& body, int& status);

  LlmConfig config_;
  std::string base_;
  std::string path_;
  mutable std::mutex mu_;
  std::condition_variable slot_;
  std::size_t in_flight_ = 0;
  std::size_t requests_ = 0;
};

enum class AnswerKind { UrlList, LongestString, Cti, Refusal, Malformed };

std::string_view to_string(AnswerKind k);

struct MitreMethod {
  std::string id;
  std::string name;
  friend bool operator==(const MitreMethod&, const MitreMethod&) = default;
};

struct CtiAnswer {
  std::string description;
  std::vector<MitreMethod> methods;
};

enum class Expected { Deobf, Cti };

struct LlmAnswer {
  AnswerKind kind = AnswerKind::Malformed;
  std::string raw_text;
  std::vector<std::string> urls;  // UrlList
  std::string longest;            // LongestString
  CtiAnswer cti;                  // Cti
  std::string reason;             // Refusal: matched pattern; Malformed: why
};

bool classify_refusal(std::string_view raw,
                      const std::vector<std::string>& patterns = default_refusal_patterns());

/// Never throws.
LlmAnswer parse_json_response(std::string_view raw, Expected expected,
                              const std::vector<std::string>& refusal_patterns = default_refusal_patterns());

/// "T" digits, optionally "." digits.
bool is_technique_id(std::string_view id);

}  // namespace psdeob
