// Symbolic presentations of minimal Cantor systems: odometers over a cyclic
// base sequence and primitive aperiodic substitution subshifts.
#ifndef CANTORFLOW_SYSTEM_HPP
#define CANTORFLOW_SYSTEM_HPP

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "cantorflow/rational.hpp"

namespace cantorflow {

enum class SystemKind { odometer, substitution };

// Symbols are single chars: digit positions use '0'..'9','a'..'z' (bases up
// to 36), substitution alphabets use their own letters.
int symbol_value(char c);
char value_symbol(int v);

class SymbolicSystem : public std::enable_shared_from_this<SymbolicSystem> {
public:
    // Descriptor grammar:
    //   odometer base=<int>[,<int>...]      (base list repeats cyclically)
    //   substitution <letter>:<word>(,<letter>:<word>)*
    static std::shared_ptr<const SymbolicSystem> parse(const std::string& descriptor);
    static std::shared_ptr<const SymbolicSystem> make_odometer(std::vector<int> base_cycle);
    static std::shared_ptr<const SymbolicSystem> make_substitution(std::map<char, std::string> rules);

    SystemKind kind() const { return kind_; }
    bool is_odometer() const { return kind_ == SystemKind::odometer; }
    const std::string& descriptor() const { return descriptor_; }

    // --- odometer ---
    const std::vector<int>& base_cycle() const { return base_cycle_; }
    int base_at(int position) const { return base_cycle_[position % base_cycle_.size()]; }
    // Product of the first `depth` bases (number of depth-d cylinders).
    Int cylinder_count(int depth) const;

    // --- substitution ---
    const std::vector<char>& alphabet() const { return alphabet_; }
    const std::string& rule(char letter) const;
    std::string substitute(const std::string& word, int power = 1) const;
    // Sorted admissible words of the given length (the subshift language).
    const std::vector<std::string>& language(int length) const;
    bool admissible(const std::string& word) const;
    // Power p with every |rule^p(letter)| >= 2 (used by language closure).
    int growth_power() const { return growth_power_; }

    // Number of distinct words per length for the cylinder basis:
    // depth-d cylinders are digit words (odometer) or centered words of
    // length 2d (substitution).
    std::vector<std::string> depth_words(int depth) const;
    int word_length(int depth) const { return is_odometer() ? depth : 2 * depth; }

private:
    SymbolicSystem() = default;

    void validate_substitution();
    void extend_language(int length) const;   // callers hold lang_mutex_

    SystemKind kind_ = SystemKind::odometer;
    std::string descriptor_;
    std::vector<int> base_cycle_;
    std::vector<char> alphabet_;
    std::map<char, std::string> rules_;
    int growth_power_ = 1;
    int self_power_ = 1;    // rule^self_power_(a0) contains a0

    mutable std::mutex lang_mutex_;
    mutable int lang_max_ = 0;
    mutable std::map<int, std::vector<std::string>> lang_cache_;
};

using SystemPtr = std::shared_ptr<const SymbolicSystem>;

} // namespace cantorflow

#endif
