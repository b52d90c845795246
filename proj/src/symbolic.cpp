#include "fracfour/symbolic.hpp"

namespace ff {

void Alphabet::validate() const {
  if (size < 2) throw std::invalid_argument("Alphabet: size must be >= 2");
  if (!tail_truncated && tail_mass_bound != 0.0)
    throw std::invalid_argument(
        "Alphabet: tail_mass_bound must be 0 for untruncated alphabets");
  if (tail_mass_bound < 0.0)
    throw std::invalid_argument("Alphabet: tail_mass_bound must be >= 0");
}

TransitionRule::TransitionRule(int size, bool all_allowed)
    : size_(size), table_(static_cast<size_t>(size) * size,
                          all_allowed ? 1 : 0) {}

TransitionRule TransitionRule::from_json(const nlohmann::json& j) {
  const int size = j.at("size").get<int>();
  TransitionRule rule(size, true);
  if (j.contains("forbidden_pairs")) {
    for (const auto& pair : j.at("forbidden_pairs")) {
      const int a = pair.at(0).get<int>();
      const int b = pair.at(1).get<int>();
      if (a < 0 || a >= size || b < 0 || b >= size)
        throw std::invalid_argument("TransitionRule: letter out of range");
      rule.set(a, b, false);
    }
  }
  rule.validate();
  return rule;
}

void TransitionRule::validate() const {
  if (size_ < 1) throw std::invalid_argument("TransitionRule: empty");
  for (int a = 0; a < size_; ++a) {
    bool ok = false;
    for (int b = 0; b < size_ && !ok; ++b) ok = allows(a, b);
    if (!ok)
      throw std::invalid_argument("TransitionRule: letter " +
                                  std::to_string(a) +
                                  " has no admissible successor");
  }
}

double TransitionRule::count_words(int n) const {
  if (n < 1) return 0.0;
  std::vector<double> v(size_, 1.0);
  for (int step = 1; step < n; ++step) {
    std::vector<double> nv(size_, 0.0);
    for (int a = 0; a < size_; ++a)
      for (int b = 0; b < size_; ++b)
        if (allows(a, b)) nv[a] += v[b];
    v.swap(nv);
  }
  double total = 0.0;
  for (double x : v) total += x;
  return total;
}

bool TransitionRule::is_full_shift() const {
  for (char c : table_)
    if (!c) return false;
  return true;
}

Word Word::parse(const std::string& digits) {
  Word w;
  w.letters.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '9')
      throw std::invalid_argument("Word::parse: non-digit character");
    w.letters.push_back(c - '0');
  }
  return w;
}

Word Word::primed() const {
  if (letters.empty()) throw std::invalid_argument("Word::primed: empty word");
  Word w = *this;
  w.letters.pop_back();
  return w;
}

bool Word::admissible(const TransitionRule& rule) const {
  for (int l : letters)
    if (l < 0 || l >= rule.size()) return false;
  for (size_t i = 0; i + 1 < letters.size(); ++i)
    if (!rule.allows(letters[i], letters[i + 1])) return false;
  return true;
}

std::string Word::str() const {
  std::string s;
  bool wide = false;
  for (int l : letters)
    if (l > 9) wide = true;
  for (size_t i = 0; i < letters.size(); ++i) {
    if (wide && i) s += '.';
    s += std::to_string(letters[i]);
  }
  return s;
}

namespace {

void enumerate_rec(int depth, int n, const TransitionRule& rule, Word& w,
                   const std::function<void(const Word&)>& visit) {
  if (depth == n) {
    visit(w);
    return;
  }
  const int prev = depth == 0 ? -1 : w.letters.back();
  for (int a = 0; a < rule.size(); ++a) {
    if (prev >= 0 && !rule.allows(prev, a)) continue;
    w.letters.push_back(a);
    enumerate_rec(depth + 1, n, rule, w, visit);
    w.letters.pop_back();
  }
}

}  // namespace

void enumerate_words(int n, const Alphabet& alphabet,
                     const TransitionRule& rule,
                     const std::function<void(const Word&)>& visit,
                     std::uint64_t budget) {
  if (n < 1) throw std::invalid_argument("enumerate_words: n must be >= 1");
  alphabet.validate();
  if (rule.size() != alphabet.size)
    throw std::invalid_argument("enumerate_words: rule/alphabet size mismatch");
  const double count = rule.count_words(n);
  if (count > static_cast<double>(budget))
    throw BudgetError(static_cast<std::uint64_t>(
                          std::min(count, 1.8e19)),
                      budget);
  Word w;
  w.letters.reserve(n);
  enumerate_rec(0, n, rule, w, visit);
}

std::vector<Word> all_words(int n, const Alphabet& alphabet,
                            const TransitionRule& rule, std::uint64_t budget) {
  std::vector<Word> out;
  enumerate_words(n, alphabet, rule,
                  [&](const Word& w) { out.push_back(w); }, budget);
  return out;
}

std::optional<Word> concat(const Word& a, const Word& b,
                           const TransitionRule& rule, bool primed) {
  Word left = primed ? a.primed() : a;
  if (left.letters.empty()) return b;
  if (b.letters.empty()) return left;
  if (!rule.allows(left.letters.back(), b.letters.front()))
    return std::nullopt;
  left.letters.insert(left.letters.end(), b.letters.begin(), b.letters.end());
  return left;
}

}  // namespace ff
