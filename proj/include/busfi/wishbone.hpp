#ifndef BUSFI_WISHBONE_HPP
#define BUSFI_WISHBONE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "busfi/bus_types.hpp"
#include "busfi/memory_map.hpp"
#include "busfi/register_file.hpp"

namespace busfi {

/// Shared Wishbone interconnect with one master and four slaves.
///
/// Register semantics:
///  - ACK (4 bits): registered acknowledge, one bit per slave. The master
///    completes whenever any bit is high (the decoder ORs slave acks).
///  - SEL (4 bits): registered one-hot slave select, loaded when a request is
///    accepted. Read data is the OR of every selected slave's registered
///    read port, or the lowest selected slave when mux hardening is on.
///  - done (1 bit): timeout flag; forces completion with all-ones data.
///  - grant (2 bits): arbiter grant. Only master 0 exists, so any other
///    value stalls the bus for a cycle while the arbiter re-grants.
///
/// Every slave samples the shared address bus on each active cycle into its
/// registered read port, so a completion forced before the slave has sampled
/// the current address returns that slave's previous read data.
class WishboneBus {
public:
    static constexpr std::size_t kAck = 0, kSel = 1, kDone = 2, kGrant = 3;
    static constexpr std::uint32_t kTimeoutCycles = 16;
    static constexpr std::array<std::uint32_t, kRegionCount> kLatency{1, 1, 1, 2};

    static std::span<const RegisterDescriptor> register_map() {
        static constexpr RegisterDescriptor regs[] = {
            {"ACK", 4, RegisterGroup::Completion, BusKind::Wishbone},
            {"SEL", 4, RegisterGroup::Selection, BusKind::Wishbone},
            {"done", 1, RegisterGroup::Status, BusKind::Wishbone},
            {"grant", 2, RegisterGroup::Arbitration, BusKind::Wishbone},
        };
        return regs;
    }

    explicit WishboneBus(const HardeningConfig& hardening = {})
        : regs_(register_map(), hardening), mux_select_(hardening.mux_select) {}

    RegisterFile& registers() { return regs_; }
    const RegisterFile& registers() const { return regs_; }

    bool busy() const { return active_.has_value(); }

    /// Slaves that actually drive the bus for a given SEL value.
    std::uint32_t effective_select(std::uint32_t sel) const {
        if (!mux_select_ || sel == 0) return sel;
        return sel & (~sel + 1u);
    }

    std::optional<BusResponse> tick(const MemRequest* pending, MemoryMap& mem, std::uint64_t cycle) {
        if (regs_.get(kGrant) != 0) {
            // Bus owned by an absent master: no strobe reaches the slaves.
            if (pending) regs_.set(kGrant, 0);
            regs_.set(kAck, 0);
            counters_.fill(0);
            return std::nullopt;
        }

        if (!active_ && pending && pending->seq != last_completed_seq_) {
            active_ = *pending;
            regs_.set(kSel, select_for(pending->address));
            counters_.fill(0);
            timeout_ = 0;
        }
        if (!active_) {
            regs_.set(kAck, 0);
            regs_.set(kDone, 0);
            return std::nullopt;
        }

        const std::uint32_t sel = effective_select(regs_.get(kSel));

        if (regs_.get(kDone) != 0) {
            return complete(0xFFFF'FFFFu, BusStatus::WbErr, sel, cycle);
        }
        if (regs_.get(kAck) != 0) {
            std::uint32_t data = 0;
            for (std::size_t i = 0; i < kRegionCount; ++i) {
                if (sel & (1u << i)) data |= read_port_[i];
            }
            return complete(data, BusStatus::Ok, sel, cycle);
        }

        std::uint32_t ack = 0;
        for (std::size_t i = 0; i < kRegionCount; ++i) {
            if (!(sel & (1u << i))) continue;
            ++counters_[i];
            if (!is_read(active_->kind) && counters_[i] == kLatency[i]) {
                mem.slave_write(static_cast<Region>(i), active_->address, active_->store_data, active_->byte_lanes);
            }
            if (counters_[i] >= kLatency[i]) ack |= 1u << i;
        }
        regs_.set(kAck, ack);
        for (std::size_t i = 0; i < kRegionCount; ++i) {
            read_port_[i] = mem.slave_word(static_cast<Region>(i), active_->address);
        }
        if (++timeout_ >= kTimeoutCycles) regs_.set(kDone, 1);
        return std::nullopt;
    }

private:
    BusResponse complete(std::uint32_t data, BusStatus status, std::uint32_t sel, std::uint64_t cycle) {
        last_completed_seq_ = active_->seq;
        active_.reset();
        regs_.set(kAck, 0);
        regs_.set(kDone, 0);
        counters_.fill(0);
        return BusResponse{data, status, sel, cycle};
    }

    RegisterFile regs_;
    bool mux_select_ = false;
    std::optional<MemRequest> active_;
    std::uint64_t last_completed_seq_ = 0;
    std::array<std::uint32_t, kRegionCount> counters_{};
    std::array<std::uint32_t, kRegionCount> read_port_{};
    std::uint32_t timeout_ = 0;
};

}  // namespace busfi

#endif
