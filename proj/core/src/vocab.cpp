#include "him/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "him/array.hpp"

namespace him {

std::vector<std::string> Vocab::split_words(const std::string& text) {
  std::vector<std::string> words;
  std::string cur;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!cur.empty()) {
      words.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(cur);
  return words;
}

Vocab Vocab::build(std::span<const std::string> corpus, int max_size) {
  require(!corpus.empty(), "Vocab::build: empty corpus");
  require(max_size >= 1, "Vocab::build: max_size must be >= 1");
  std::map<std::string, int64_t> counts;  // ordered map keeps ties deterministic
  for (const auto& line : corpus)
    for (auto& w : split_words(line)) ++counts[w];
  std::vector<std::pair<std::string, int64_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(items.size()) > max_size) items.resize(max_size);

  Vocab v;
  v.id_to_token = {"<pad>", "<unk>"};
  for (auto& [w, n] : items) {
    (void)n;
    v.id_to_token.push_back(w);
  }
  for (int i = 0; i < static_cast<int>(v.id_to_token.size()); ++i)
    v.token_to_id[v.id_to_token[i]] = i;
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  require(tokens.size() >= 2 && tokens[0] == "<pad>" && tokens[1] == "<unk>",
          "Vocab::from_tokens: malformed token list");
  Vocab v;
  v.id_to_token = std::move(tokens);
  for (int i = 0; i < static_cast<int>(v.id_to_token.size()); ++i)
    v.token_to_id[v.id_to_token[i]] = i;
  return v;
}

int Vocab::id_of(const std::string& word) const {
  auto it = token_to_id.find(word);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::vector<int> Vocab::tokenize(const std::string& text, int max_len, int* n_real) const {
  std::vector<int> ids(static_cast<size_t>(max_len), kPad);
  auto words = split_words(text);
  int n = std::min<int>(static_cast<int>(words.size()), max_len);
  for (int i = 0; i < n; ++i) ids[i] = id_of(words[i]);
  if (n_real) *n_real = n;
  return ids;
}

}  // namespace him
