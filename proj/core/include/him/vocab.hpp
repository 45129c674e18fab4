#ifndef HIM_VOCAB_HPP
#define HIM_VOCAB_HPP

#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace him {

/// Word-level vocabulary: lowercased alphanumeric runs, most frequent
/// first (ties lexicographic), truncated to max_size, plus pad/unk.
struct Vocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> id_to_token;  // [0]="<pad>", [1]="<unk>"
  std::unordered_map<std::string, int> token_to_id;

  static Vocab build(std::span<const std::string> corpus, int max_size);
  static Vocab from_tokens(std::vector<std::string> tokens);  // checkpoint restore

  static std::vector<std::string> split_words(const std::string& text);

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& word) const;

  /// ids truncated/padded to max_len; *n_real is the count of real tokens
  /// (always a prefix; padding fills the tail).
  std::vector<int> tokenize(const std::string& text, int max_len, int* n_real = nullptr) const;
};

}  // namespace him

#endif
