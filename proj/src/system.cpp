#include "cantorflow/system.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <stdexcept>

namespace cantorflow {

int symbol_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'z') return c - 'a' + 10;
    throw std::invalid_argument(std::string("bad symbol '") + c + "'");
}

char value_symbol(int v) {
    if (v >= 0 && v < 10) return static_cast<char>('0' + v);
    if (v >= 10 && v < 36) return static_cast<char>('a' + v - 10);
    throw std::invalid_argument("symbol value out of range");
}

namespace {

std::string trimmed(const std::string& s) {
    size_t b = s.find_first_not_of(" \t");
    size_t e = s.find_last_not_of(" \t");
    if (b == std::string::npos) return "";
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

} // namespace

std::shared_ptr<const SymbolicSystem> SymbolicSystem::parse(const std::string& descriptor) {
    std::string text = trimmed(descriptor);
    if (text.rfind("odometer", 0) == 0) {
        std::string rest = trimmed(text.substr(8));
        if (rest.rfind("base=", 0) != 0)
            throw std::invalid_argument("odometer descriptor needs base=<int>[,<int>...]");
        std::vector<int> bases;
        for (const auto& part : split(rest.substr(5), ',')) {
            std::string p = trimmed(part);
            if (p.empty() || p.find_first_not_of("0123456789") != std::string::npos)
                throw std::invalid_argument("malformed base entry '" + p + "'");
            bases.push_back(std::stoi(p));
        }
        return make_odometer(std::move(bases));
    }
    if (text.rfind("substitution", 0) == 0) {
        std::string rest = trimmed(text.substr(12));
        std::map<char, std::string> rules;
        for (const auto& part : split(rest, ',')) {
            std::string p = trimmed(part);
            if (p.size() < 3 || p[1] != ':')
                throw std::invalid_argument("malformed substitution rule '" + p + "'");
            if (rules.count(p[0])) throw std::invalid_argument("duplicate rule for letter");
            rules[p[0]] = p.substr(2);
        }
        return make_substitution(std::move(rules));
    }
    throw std::invalid_argument("unknown system family in descriptor '" + descriptor + "'");
}

std::shared_ptr<const SymbolicSystem> SymbolicSystem::make_odometer(std::vector<int> base_cycle) {
    if (base_cycle.empty()) throw std::invalid_argument("odometer needs at least one base entry");
    for (int b : base_cycle) {
        if (b < 2) throw std::invalid_argument("odometer base entry < 2");
        if (b > 36) throw std::invalid_argument("odometer base entry > 36 unsupported by the textual format");
    }
    auto sys = std::shared_ptr<SymbolicSystem>(new SymbolicSystem());
    sys->kind_ = SystemKind::odometer;
    sys->base_cycle_ = std::move(base_cycle);
    std::string desc = "odometer base=";
    for (size_t i = 0; i < sys->base_cycle_.size(); ++i)
        desc += (i ? "," : "") + std::to_string(sys->base_cycle_[i]);
    sys->descriptor_ = desc;
    return sys;
}

std::shared_ptr<const SymbolicSystem> SymbolicSystem::make_substitution(std::map<char, std::string> rules) {
    if (rules.empty()) throw std::invalid_argument("substitution needs at least one rule");
    auto sys = std::shared_ptr<SymbolicSystem>(new SymbolicSystem());
    sys->kind_ = SystemKind::substitution;
    sys->rules_ = std::move(rules);
    for (const auto& [letter, image] : sys->rules_) {
        sys->alphabet_.push_back(letter);
        if (image.empty()) throw std::invalid_argument("erasing substitution rule");
        for (char c : image)
            if (!sys->rules_.count(c))
                throw std::invalid_argument(std::string("rule image uses unknown letter '") + c + "'");
    }
    std::string desc = "substitution ";
    bool first = true;
    for (const auto& [letter, image] : sys->rules_) {
        desc += (first ? "" : ",") + std::string(1, letter) + ":" + image;
        first = false;
    }
    sys->descriptor_ = desc;
    sys->validate_substitution();
    return sys;
}

void SymbolicSystem::validate_substitution() {
    int n = static_cast<int>(alphabet_.size());

    // Primitivity: some power of the incidence matrix is entrywise positive.
    // Boolean reachability up to the Wielandt bound (n-1)^2 + 1.
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    auto index = [&](char c) {
        return static_cast<int>(std::find(alphabet_.begin(), alphabet_.end(), c) - alphabet_.begin());
    };
    for (int j = 0; j < n; ++j)
        for (char c : rules_.at(alphabet_[j])) reach[index(c)][j] = true;
    int bound = (n - 1) * (n - 1) + 1;
    auto all_positive = [&](const std::vector<std::vector<bool>>& m) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (!m[i][j]) return false;
        return true;
    };
    std::vector<std::vector<bool>> acc = reach;
    bool primitive = all_positive(acc);
    for (int p = 1; p < bound && !primitive; ++p) {
        std::vector<std::vector<bool>> next(n, std::vector<bool>(n, false));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k)
                if (acc[i][k])
                    for (int j = 0; j < n; ++j)
                        if (reach[k][j]) next[i][j] = true;
        acc = std::move(next);
        primitive = all_positive(acc);
    }
    if (!primitive) throw std::invalid_argument("substitution is not primitive");

    // Power with every letter image of length >= 2 (exists: primitive rules
    // strictly grow some letter, hence all letters within n steps).
    growth_power_ = 1;
    while (growth_power_ <= 2 * n + 2) {
        bool ok = true;
        for (char a : alphabet_)
            if (substitute(std::string(1, a), growth_power_).size() < 2) ok = false;
        if (ok) break;
        ++growth_power_;
    }
    if (growth_power_ > 2 * n + 2) throw std::invalid_argument("substitution does not grow");

    // Power whose image of the seed letter contains the seed letter again,
    // so iterating it produces a monotone factor chain.
    self_power_ = 1;
    while (self_power_ <= bound + 1) {
        if (substitute(std::string(1, alphabet_[0]), self_power_).find(alphabet_[0]) != std::string::npos)
            break;
        ++self_power_;
    }
    if (self_power_ > bound + 1) throw std::invalid_argument("substitution is not primitive");

    // Aperiodicity via Morse-Hedlund: an infinite subshift has word
    // complexity p(k) > k for every k.
    for (int k = 1; k <= 24; ++k) {
        if (static_cast<int>(language(k).size()) <= k)
            throw std::invalid_argument("substitution subshift is periodic (complexity bound violated)");
    }
}

const std::string& SymbolicSystem::rule(char letter) const {
    auto it = rules_.find(letter);
    if (it == rules_.end()) throw std::invalid_argument("unknown letter");
    return it->second;
}

std::string SymbolicSystem::substitute(const std::string& word, int power) const {
    std::string cur = word;
    for (int p = 0; p < power; ++p) {
        std::string next;
        for (char c : cur) next += rule(c);
        cur = std::move(next);
    }
    return cur;
}

Int SymbolicSystem::cylinder_count(int depth) const {
    Int n = 1;
    for (int i = 0; i < depth; ++i) n *= base_at(i);
    return n;
}

void SymbolicSystem::extend_language(int length) const {
    // Iterate s -> rule^P(s) from the seed letter, P a multiple of the
    // seed-refixing power that also doubles every letter: each iterate
    // contains the previous one as a factor, so the factor sets grow
    // monotonically, and once the window-L factor set stops growing (with
    // all letters present) it is closed under image-extraction and every
    // admissible word descends to the seed through blocks of at most half
    // the length, so the set equals the language up to length L.
    if (length <= 0) {
        lang_cache_[0] = {""};
        lang_max_ = std::max(lang_max_, 0);
        return;
    }
    int step_power = self_power_ * ((growth_power_ + self_power_ - 1) / self_power_);
    std::string s(1, alphabet_[0]);
    auto collect = [&](const std::string& w) {
        std::set<std::string> out;
        for (int l = 1; l <= length; ++l)
            for (size_t i = 0; i + l <= w.size(); ++i) out.insert(w.substr(i, l));
        return out;
    };
    std::set<std::string> prev;
    const size_t cap = 80u * 1000u * 1000u;
    while (true) {
        s = substitute(s, step_power);
        if (s.size() > cap) throw std::runtime_error("language generation exceeded the string budget");
        std::set<std::string> cur = collect(s);
        bool all_letters = true;
        for (char a : alphabet_)
            if (!cur.count(std::string(1, a))) all_letters = false;
        if (all_letters && cur == prev) break;
        prev = std::move(cur);
    }
    std::map<int, std::vector<std::string>> by_len;
    for (const auto& w : prev) by_len[static_cast<int>(w.size())].push_back(w);
    for (int l = 1; l <= length; ++l) {
        auto& v = by_len[l];
        std::sort(v.begin(), v.end());
        lang_cache_[l] = std::move(v);
    }
    lang_cache_[0] = {""};
    lang_max_ = length;
}

const std::vector<std::string>& SymbolicSystem::language(int length) const {
    std::lock_guard<std::mutex> lock(lang_mutex_);
    if (length > lang_max_ || !lang_cache_.count(length))
        extend_language(std::max(length, lang_max_ + lang_max_ / 2));
    return lang_cache_.at(length);
}

bool SymbolicSystem::admissible(const std::string& word) const {
    const auto& lang = language(static_cast<int>(word.size()));
    return std::binary_search(lang.begin(), lang.end(), word);
}

std::vector<std::string> SymbolicSystem::depth_words(int depth) const {
    if (is_odometer()) {
        std::vector<std::string> out{""};
        for (int pos = 0; pos < depth; ++pos) {
            std::vector<std::string> next;
            next.reserve(out.size() * base_at(pos));
            for (const auto& w : out)
                for (int d = 0; d < base_at(pos); ++d) next.push_back(w + value_symbol(d));
            out = std::move(next);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    return language(2 * depth);
}

} // namespace cantorflow
