// fracfour: alphabets, transition rules and admissible-word enumeration.
#ifndef FRACFOUR_SYMBOLIC_HPP
#define FRACFOUR_SYMBOLIC_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ff {

// A finite alphabet, possibly a truncation of a countable one.  When
// tail_truncated is set, tail_mass_bound records the estimated total Gibbs
// mass of the discarded letters.
struct Alphabet {
  int size = 2;
  bool tail_truncated = false;
  double tail_mass_bound = 0.0;

  void validate() const;
};

// Subshift-of-finite-type transition table A(a, b) in {0, 1}: the pair ab is
// admissible iff allows(a, b).
class TransitionRule {
 public:
  TransitionRule() = default;
  explicit TransitionRule(int size, bool all_allowed = true);

  static TransitionRule full_shift(int size) { return TransitionRule(size); }
  static TransitionRule from_json(const nlohmann::json& j);

  int size() const { return size_; }
  bool allows(int a, int b) const { return table_[a * size_ + b] != 0; }
  void set(int a, int b, bool allowed) { table_[a * size_ + b] = allowed; }

  // Every letter must have at least one admissible successor (no dead
  // states); throws otherwise.
  void validate() const;

  // Number of admissible words of length n, computed from the transition
  // matrix as 1^T A^{n-1} 1 (in double precision; exact for desk scales).
  double count_words(int n) const;

  bool is_full_shift() const;

 private:
  int size_ = 0;
  std::vector<char> table_;
};

// An admissible finite word over the active alphabet.
struct Word {
  std::vector<int> letters;

  Word() = default;
  explicit Word(std::vector<int> l) : letters(std::move(l)) {}
  // Parse from a string of digits when the alphabet has <= 10 letters,
  // e.g. Word::parse("0010").
  static Word parse(const std::string& digits);

  int length() const { return static_cast<int>(letters.size()); }
  int last() const { return letters.back(); }

  // Primed word: drop the last letter.
  Word primed() const;

  bool admissible(const TransitionRule& rule) const;
  std::string str() const;

  bool operator==(const Word& o) const = default;
  auto operator<=>(const Word& o) const = default;
};

// Thrown when an enumeration would exceed the configured word budget.
struct BudgetError : std::runtime_error {
  std::uint64_t requested;
  BudgetError(std::uint64_t req, std::uint64_t budget)
      : std::runtime_error("word enumeration budget exceeded: " +
                           std::to_string(req) + " words requested, budget " +
                           std::to_string(budget)),
        requested(req) {}
};

constexpr std::uint64_t kDefaultWordBudget = 100'000'000ULL;

// Streams the admissible words of length n in lexicographic order, calling
// visit(word) for each.  Never materializes the full set.  Throws
// BudgetError when the count exceeds the budget.
void enumerate_words(int n, const Alphabet& alphabet,
                     const TransitionRule& rule,
                     const std::function<void(const Word&)>& visit,
                     std::uint64_t budget = kDefaultWordBudget);

// Convenience: collect the enumeration into a vector.
std::vector<Word> all_words(int n, const Alphabet& alphabet,
                            const TransitionRule& rule,
                            std::uint64_t budget = kDefaultWordBudget);

// Joins two admissible words.  In primed mode the last letter of the left
// word is dropped before joining (the usual a'b concatenation).  Returns
// nullopt when the junction pair is inadmissible.
std::optional<Word> concat(const Word& a, const Word& b,
                           const TransitionRule& rule, bool primed = false);

}  // namespace ff

#endif  // FRACFOUR_SYMBOLIC_HPP
