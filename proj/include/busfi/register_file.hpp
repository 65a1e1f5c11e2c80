#ifndef BUSFI_REGISTER_FILE_HPP
#define BUSFI_REGISTER_FILE_HPP

#include <array>
#include <bit>
#include <cstdint>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "busfi/bus_types.hpp"

namespace busfi {

enum class RegisterGroup : std::uint8_t { Completion, Selection, Arbitration, State, Burst, Status };

constexpr std::string_view group_name(RegisterGroup g) {
    switch (g) {
        case RegisterGroup::Completion: return "completion";
        case RegisterGroup::Selection: return "selection";
        case RegisterGroup::Arbitration: return "arbitration";
        case RegisterGroup::State: return "state";
        case RegisterGroup::Burst: return "burst";
        case RegisterGroup::Status: return "status";
    }
    return "?";
}

struct RegisterDescriptor {
    std::string_view name;
    unsigned width;
    RegisterGroup group;
    BusKind bus;
};

constexpr std::uint32_t width_mask(unsigned width) {
    return width >= 32 ? 0xFFFF'FFFFu : ((1u << width) - 1u);
}

struct HardeningConfig {
    std::set<std::string> tmr_registers;
    bool mux_select = false;

    bool operator==(const HardeningConfig&) const = default;
};

class RegisterError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Named control registers of one interconnect instance. A register under
/// TMR keeps three replicas and reads back as their bitwise majority; the
/// model's own logic always writes all replicas.
class RegisterFile {
public:
    RegisterFile() = default;

    RegisterFile(std::span<const RegisterDescriptor> descriptors, const HardeningConfig& hardening)
        : descriptors_(descriptors.begin(), descriptors.end()), cells_(descriptors_.size()) {
        for (const auto& name : hardening.tmr_registers) {
            cells_[index_of(name)].tmr = true;
        }
    }

    std::size_t size() const { return descriptors_.size(); }
    std::span<const RegisterDescriptor> descriptors() const { return descriptors_; }
    const RegisterDescriptor& descriptor(std::size_t i) const { return descriptors_.at(i); }
    bool is_tmr(std::size_t i) const { return cells_.at(i).tmr; }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < descriptors_.size(); ++i) {
            if (descriptors_[i].name == name) return i;
        }
        throw RegisterError("unknown register '" + std::string(name) + "'");
    }

    bool contains(std::string_view name) const {
        for (const auto& d : descriptors_) {
            if (d.name == name) return true;
        }
        return false;
    }

    /// Effective value seen by the protocol logic.
    std::uint32_t get(std::size_t i) const {
        const auto& c = cells_[i];
        if (!c.tmr) return c.replica[0];
        const auto& r = c.replica;
        return (r[0] & r[1]) | (r[0] & r[2]) | (r[1] & r[2]);
    }

    void set(std::size_t i, std::uint32_t value) {
        value &= width_mask(descriptors_[i].width);
        cells_[i].replica = {value, value, value};
    }

    std::uint32_t replica(std::size_t i, unsigned r) const { return cells_.at(i).replica.at(r); }

    std::uint32_t read(std::string_view name) const { return get(index_of(name)); }

    void write(std::string_view name, std::uint32_t value) {
        auto i = index_of(name);
        if (value & ~width_mask(descriptors_[i].width))
            throw RegisterError("value overflows register '" + std::string(name) + "'");
        set(i, value);
    }

    /// Injection hook: XOR into one physical copy. Replica index is ignored
    /// unless the register is TMR-protected.
    void flip(std::size_t i, std::uint32_t mask, unsigned replica = 0) {
        if (mask & ~width_mask(descriptors_[i].width))
            throw RegisterError("mask overflows register '" + std::string(descriptors_[i].name) + "'");
        auto& c = cells_[i];
        if (!c.tmr) {
            c.replica[0] ^= mask;
            c.replica[1] = c.replica[2] = c.replica[0];
            return;
        }
        if (replica > 2) throw RegisterError("replica index out of range");
        c.replica[replica] ^= mask;
    }

private:
    struct Cell {
        std::array<std::uint32_t, 3> replica{0, 0, 0};
        bool tmr = false;
    };

    std::vector<RegisterDescriptor> descriptors_;
    std::vector<Cell> cells_;
};

inline unsigned popcount32(std::uint32_t v) { return static_cast<unsigned>(std::popcount(v)); }

}  // namespace busfi

#endif
