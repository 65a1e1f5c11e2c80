#ifndef BUSFI_FAULT_HPP
#define BUSFI_FAULT_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "busfi/bus_types.hpp"
#include "busfi/register_file.hpp"

namespace busfi {

enum class FaultModelKind : std::uint8_t { BitFlip, ManipulateRegister, TwoBitFlips, ManipulateTwoRegisters };

inline constexpr FaultModelKind kAllModels[] = {FaultModelKind::BitFlip, FaultModelKind::ManipulateRegister,
                                                FaultModelKind::TwoBitFlips, FaultModelKind::ManipulateTwoRegisters};

constexpr std::string_view model_code(FaultModelKind m) {
    switch (m) {
        case FaultModelKind::BitFlip: return "BF";
        case FaultModelKind::ManipulateRegister: return "MR";
        case FaultModelKind::TwoBitFlips: return "2BF";
        case FaultModelKind::ManipulateTwoRegisters: return "M2R";
    }
    return "?";
}

constexpr std::string_view model_label(FaultModelKind m) {
    switch (m) {
        case FaultModelKind::BitFlip: return "Bit-flip";
        case FaultModelKind::ManipulateRegister: return "Manipulate Register";
        case FaultModelKind::TwoBitFlips: return "2 Bit-Flips";
        case FaultModelKind::ManipulateTwoRegisters: return "Manipulate Two Registers";
    }
    return "?";
}

inline std::optional<FaultModelKind> parse_model(std::string_view s) {
    std::string u(s);
    for (auto& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (u == "BF" || u == "BIT_FLIP") return FaultModelKind::BitFlip;
    if (u == "MR" || u == "MANIPULATE_REGISTER") return FaultModelKind::ManipulateRegister;
    if (u == "2BF" || u == "TWO_BIT_FLIPS") return FaultModelKind::TwoBitFlips;
    if (u == "M2R" || u == "MANIPULATE_TWO_REGISTERS") return FaultModelKind::ManipulateTwoRegisters;
    return std::nullopt;
}

inline constexpr unsigned kDefaultMaxFlips = 4;

class FaultError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FaultTarget {
    std::string reg;
    std::uint32_t mask = 0;
    unsigned replica = 0;  // meaningful only for TMR-protected registers
    unsigned width = 0;    // digits used when printing the mask

    bool operator==(const FaultTarget& o) const {
        return reg == o.reg && mask == o.mask && replica == o.replica;
    }
};

/// One single-cycle injection.
struct FaultSpec {
    FaultModelKind model = FaultModelKind::BitFlip;
    std::optional<BusKind> bus;
    std::uint64_t cycle = 0;
    std::vector<FaultTarget> targets;

    unsigned total_flips() const {
        unsigned n = 0;
        for (const auto& t : targets) n += popcount32(t.mask);
        return n;
    }

    bool operator==(const FaultSpec& o) const {
        return model == o.model && bus == o.bus && cycle == o.cycle && targets == o.targets;
    }
};

inline std::string format_mask(std::uint32_t mask, unsigned width) {
    if (width == 0) width = std::max(1u, 32u - static_cast<unsigned>(std::countl_zero(mask)));
    std::string s = "0b";
    for (int b = static_cast<int>(width) - 1; b >= 0; --b) s.push_back(((mask >> b) & 1u) ? '1' : '0');
    return s;
}

/// `model=BF bus=WB cycle=123 tgt=ACK:0b0001[,tgt2=grant:0b01]`; a TMR
/// replica is written `ACK@2:0b0001`.
inline std::string format_spec(const FaultSpec& spec) {
    std::ostringstream os;
    os << "model=" << model_code(spec.model);
    if (spec.bus) os << " bus=" << bus_code(*spec.bus);
    os << " cycle=" << spec.cycle;
    for (std::size_t i = 0; i < spec.targets.size(); ++i) {
        const auto& t = spec.targets[i];
        os << (i == 0 ? " tgt=" : ",tgt2=") << t.reg;
        if (t.replica != 0) os << '@' << t.replica;
        os << ':' << format_mask(t.mask, t.width);
    }
    return os.str();
}

inline FaultSpec parse_spec(std::string_view line) {
    FaultSpec spec;
    bool have_model = false, have_cycle = false;
    std::string text(line);
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream is(text);
    std::string tok;
    std::optional<FaultTarget> t1, t2;
    auto parse_target = [](const std::string& v) {
        auto colon = v.rfind(':');
        if (colon == std::string::npos || colon == 0) throw FaultError("target needs NAME:MASK, got '" + v + "'");
        FaultTarget t;
        std::string name = v.substr(0, colon);
        if (auto at = name.find('@'); at != std::string::npos) {
            const std::string rep = name.substr(at + 1);
            if (rep != "0" && rep != "1" && rep != "2") throw FaultError("bad replica index in '" + v + "'");
            t.replica = static_cast<unsigned>(rep[0] - '0');
            name.resize(at);
        }
        t.reg = name;
        std::string m = v.substr(colon + 1);
        try {
            if (m.rfind("0b", 0) == 0 || m.rfind("0B", 0) == 0) {
                if (m.size() == 2 || m.size() > 34) throw FaultError("bad mask");
                t.mask = static_cast<std::uint32_t>(std::stoull(m.substr(2), nullptr, 2));
                t.width = static_cast<unsigned>(m.size() - 2);
            } else {
                t.mask = static_cast<std::uint32_t>(std::stoull(m, nullptr, 0));
            }
        } catch (const std::logic_error&) {
            throw FaultError("bad mask '" + m + "'");
        }
        return t;
    };
    while (is >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw FaultError("expected key=value, got '" + tok + "'");
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "model") {
            auto m = parse_model(val);
            if (!m) throw FaultError("unknown fault model '" + val + "'");
            spec.model = *m;
            have_model = true;
        } else if (key == "bus") {
            auto b = parse_bus_kind(val);
            if (!b) throw FaultError("unknown bus '" + val + "'");
            spec.bus = *b;
        } else if (key == "cycle") {
            try {
                std::size_t used = 0;
                spec.cycle = std::stoull(val, &used, 10);
                if (used != val.size()) throw FaultError("bad cycle");
            } catch (const std::logic_error&) {
                throw FaultError("bad cycle '" + val + "'");
            }
            have_cycle = true;
        } else if (key == "tgt") {
            t1 = parse_target(val);
        } else if (key == "tgt2") {
            t2 = parse_target(val);
        } else {
            throw FaultError("unknown key '" + key + "'");
        }
    }
    if (!have_model) throw FaultError("missing model=");
    if (!have_cycle) throw FaultError("missing cycle=");
    if (!t1) throw FaultError("missing tgt=");
    spec.targets.push_back(*t1);
    if (t2) spec.targets.push_back(*t2);
    return spec;
}

/// Checks the per-model invariants against a register map and fills in the
/// target widths.
inline void validate_spec(FaultSpec& spec, const RegisterFile& regs, unsigned max_flips = kDefaultMaxFlips) {
    if (spec.targets.empty() || spec.targets.size() > 2) throw FaultError("a fault spec has one or two targets");
    for (auto& t : spec.targets) {
        if (!regs.contains(t.reg)) throw FaultError("unknown register '" + t.reg + "'");
        const auto idx = regs.index_of(t.reg);
        const unsigned w = regs.descriptor(idx).width;
        if (t.mask == 0) throw FaultError("empty mask for '" + t.reg + "'");
        if (t.mask & ~width_mask(w)) throw FaultError("mask wider than register '" + t.reg + "'");
        if (t.replica != 0 && !regs.is_tmr(idx)) throw FaultError("replica given for unprotected '" + t.reg + "'");
        t.width = w;
    }
    const unsigned flips = spec.total_flips();
    if (flips > max_flips) throw FaultError("fault flips more than max_flips bits");
    const std::size_t n = spec.targets.size();
    if (n == 2 && spec.targets[0].reg == spec.targets[1].reg && spec.targets[0].replica == spec.targets[1].replica)
        throw FaultError("the two targets must be distinct");
    switch (spec.model) {
        case FaultModelKind::BitFlip:
            if (n != 1 || flips != 1) throw FaultError("BF flips exactly one bit of one register");
            break;
        case FaultModelKind::ManipulateRegister:
            if (n != 1) throw FaultError("MR targets exactly one register");
            break;
        case FaultModelKind::TwoBitFlips:
            if (flips != 2) throw FaultError("2BF flips exactly two bits");
            break;
        case FaultModelKind::ManipulateTwoRegisters:
            if (n != 2) throw FaultError("M2R targets exactly two registers");
            break;
    }
}

/// XOR the fault masks into the register file when `current_cycle` is the
/// injection cycle; returns whether anything was applied.
inline bool apply_fault(RegisterFile& regs, const FaultSpec& spec, std::uint64_t current_cycle) {
    if (current_cycle != spec.cycle) return false;
    for (const auto& t : spec.targets) regs.flip(regs.index_of(t.reg), t.mask, t.replica);
    return true;
}

enum class EnumerationMode : std::uint8_t { Exhaustive, Sampled };

struct EnumerationSpace {
    BusKind bus = BusKind::Wishbone;
    std::uint64_t cycle_first = 0;
    std::uint64_t cycle_last = 0;  // inclusive
    std::vector<std::string> registers;  // empty selects every register
    FaultModelKind model = FaultModelKind::BitFlip;
    unsigned max_flips = kDefaultMaxFlips;
    EnumerationMode mode = EnumerationMode::Exhaustive;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    std::set<std::string> tmr_registers;  // each of these exposes three replicas
};

namespace detail {

struct PhysicalTarget {
    std::string_view reg;
    unsigned width;
    unsigned replica;
};

inline std::vector<PhysicalTarget> physical_targets(const EnumerationSpace& space,
                                                    std::span<const RegisterDescriptor> regs) {
    for (const auto& name : space.registers) {
        if (std::none_of(regs.begin(), regs.end(), [&](const auto& d) { return d.name == name; }))
            throw FaultError("register filter names unknown register '" + name + "'");
    }
    std::vector<PhysicalTarget> out;
    for (const auto& d : regs) {
        if (!space.registers.empty() &&
            std::find(space.registers.begin(), space.registers.end(), d.name) == space.registers.end())
            continue;
        const unsigned copies = space.tmr_registers.count(std::string(d.name)) ? 3 : 1;
        for (unsigned r = 0; r < copies; ++r) out.push_back({d.name, d.width, r});
    }
    return out;
}

inline std::uint64_t choose(unsigned n, unsigned k) {
    if (k > n) return 0;
    std::uint64_t r = 1;
    for (unsigned i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Masks of a `width`-bit register with popcount in [lo, hi], ascending.
inline std::vector<std::uint32_t> masks_with_popcount(unsigned width, unsigned lo, unsigned hi) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t m = 1; m <= width_mask(width) && m != 0; ++m) {
        const unsigned p = popcount32(m);
        if (p >= lo && p <= hi) out.push_back(m);
        if (m == width_mask(width)) break;
    }
    return out;
}

}  // namespace detail

/// Number of legal specs in exhaustive mode, from the closed forms rather
/// than by walking the stream.
inline std::uint64_t space_size(const EnumerationSpace& space, std::span<const RegisterDescriptor> regs) {
    if (space.cycle_last < space.cycle_first) return 0;
    const auto targets = detail::physical_targets(space, regs);
    const unsigned cap = space.max_flips;
    auto masks_upto = [&](unsigned w, unsigned k_max) {
        std::uint64_t s = 0;
        for (unsigned k = 1; k <= std::min(w, k_max); ++k) s += detail::choose(w, k);
        return s;
    };
    std::uint64_t per_cycle = 0;
    switch (space.model) {
        case FaultModelKind::BitFlip:
            if (cap >= 1)
                for (const auto& t : targets) per_cycle += t.width;
            break;
        case FaultModelKind::ManipulateRegister:
            for (const auto& t : targets) per_cycle += masks_upto(t.width, cap);
            break;
        case FaultModelKind::TwoBitFlips:
            if (cap < 2) break;
            for (std::size_t i = 0; i < targets.size(); ++i) {
                per_cycle += detail::choose(targets[i].width, 2);
                for (std::size_t j = i + 1; j < targets.size(); ++j)
                    per_cycle += std::uint64_t{targets[i].width} * targets[j].width;
            }
            break;
        case FaultModelKind::ManipulateTwoRegisters:
            for (std::size_t i = 0; i < targets.size(); ++i) {
                for (std::size_t j = i + 1; j < targets.size(); ++j) {
                    for (unsigned p = 1; p + 1 <= cap && p <= targets[i].width; ++p)
                        per_cycle += detail::choose(targets[i].width, p) * masks_upto(targets[j].width, cap - p);
                }
            }
            break;
    }
    return per_cycle * (space.cycle_last - space.cycle_first + 1);
}

/// Random-access view of the exhaustive stream: index order is
/// (cycle, first target, first mask, second target, second mask).
class FaultEnumerator {
public:
    FaultEnumerator(const EnumerationSpace& space, std::span<const RegisterDescriptor> regs) : space_(space) {
        if (space.cycle_last < space.cycle_first) throw FaultError("empty cycle window");
        const auto targets = detail::physical_targets(space, regs);
        const unsigned cap = space.max_flips;
        auto single = [&](const detail::PhysicalTarget& t, std::uint32_t m) {
            combos_.push_back({{t, m}, std::nullopt});
        };
        for (std::size_t i = 0; i < targets.size(); ++i) {
            const auto& a = targets[i];
            switch (space.model) {
                case FaultModelKind::BitFlip:
                    if (cap >= 1)
                        for (unsigned b = 0; b < a.width; ++b) single(a, 1u << b);
                    break;
                case FaultModelKind::ManipulateRegister:
                    for (auto m : detail::masks_with_popcount(a.width, 1, cap)) single(a, m);
                    break;
                case FaultModelKind::TwoBitFlips: {
                    if (cap < 2) break;
                    // Per first mask: the two-bit single-register mask, then the pairs.
                    for (std::uint32_t m = 1; m <= width_mask(a.width); ++m) {
                        const unsigned p = popcount32(m);
                        if (p == 2) single(a, m);
                        if (p == 1) {
                            for (std::size_t j = i + 1; j < targets.size(); ++j)
                                for (unsigned b = 0; b < targets[j].width; ++b)
                                    combos_.push_back({{a, m}, std::pair{targets[j], 1u << b}});
                        }
                        if (m == width_mask(a.width)) break;
                    }
                    break;
                }
                case FaultModelKind::ManipulateTwoRegisters:
                    for (auto m1 : detail::masks_with_popcount(a.width, 1, cap > 0 ? cap - 1 : 0))
                        for (std::size_t j = i + 1; j < targets.size(); ++j)
                            for (auto m2 : detail::masks_with_popcount(targets[j].width, 1, cap - popcount32(m1)))
                                combos_.push_back({{a, m1}, std::pair{targets[j], m2}});
                    break;
            }
        }
        if (combos_.empty()) throw FaultError("fault space is empty (register filter or max_flips excludes all)");
        total_ = combos_.size() * (space.cycle_last - space.cycle_first + 1);
        if (space.mode == EnumerationMode::Sampled) sample();
    }

    /// Exhaustive size of the space.
    std::uint64_t space_size() const { return total_; }

    /// Number of specs this enumerator yields (n for sampled mode).
    std::uint64_t size() const { return space_.mode == EnumerationMode::Sampled ? picks_.size() : total_; }

    FaultSpec operator[](std::uint64_t i) const { return unrank(space_.mode == EnumerationMode::Sampled ? picks_[i] : i); }

    std::uint64_t index_of(std::uint64_t i) const { return space_.mode == EnumerationMode::Sampled ? picks_[i] : i; }

    FaultSpec unrank(std::uint64_t index) const {
        const auto& c = combos_[index % combos_.size()];
        FaultSpec spec;
        spec.model = space_.model;
        spec.bus = space_.bus;
        spec.cycle = space_.cycle_first + index / combos_.size();
        spec.targets.push_back(to_target(c.first));
        if (c.second) spec.targets.push_back(to_target(*c.second));
        return spec;
    }

    std::vector<FaultSpec> materialize() const {
        std::vector<FaultSpec> out;
        out.reserve(size());
        for (std::uint64_t i = 0; i < size(); ++i) out.push_back((*this)[i]);
        return out;
    }

private:
    using Part = std::pair<detail::PhysicalTarget, std::uint32_t>;
    struct Combo {
        Part first;
        std::optional<Part> second;
    };

    static FaultTarget to_target(const Part& p) {
        return FaultTarget{std::string(p.first.reg), p.second, p.first.replica, p.first.width};
    }

    /// Uniform draw in [0, bound) with rejection, so the result only depends
    /// on the mt19937_64 stream and not on the standard library.
    static std::uint64_t draw(std::mt19937_64& rng, std::uint64_t bound) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do v = rng();
        while (v >= limit);
        return v % bound;
    }

    // Floyd's algorithm: n distinct indices, uniform over all n-subsets.
    void sample() {
        const std::uint64_t n = std::min<std::uint64_t>(space_.samples, total_);
        std::mt19937_64 rng(space_.seed);
        std::unordered_set<std::uint64_t> chosen;
        for (std::uint64_t j = total_ - n; j < total_; ++j) {
            const std::uint64_t t = draw(rng, j + 1);
            if (!chosen.insert(t).second) chosen.insert(j);
        }
        picks_.assign(chosen.begin(), chosen.end());
        std::sort(picks_.begin(), picks_.end());
    }

    EnumerationSpace space_;
    std::vector<Combo> combos_;
    std::uint64_t total_ = 0;
    std::vector<std::uint64_t> picks_;
};

}  // namespace busfi

#endif
