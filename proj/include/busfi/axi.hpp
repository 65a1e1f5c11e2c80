#ifndef BUSFI_AXI_HPP
#define BUSFI_AXI_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "busfi/bus_types.hpp"
#include "busfi/memory_map.hpp"
#include "busfi/register_file.hpp"

namespace busfi {

/// Encodings shared by every protocol FSM. ERROR sits at Hamming distance 1
/// from both IDLE and RESP; the remaining codes are unreachable and hold.
namespace fsm {
inline constexpr std::uint32_t kIdle = 0b000;
inline constexpr std::uint32_t kAddr = 0b001;
inline constexpr std::uint32_t kResp = 0b011;
inline constexpr std::uint32_t kError = 0b010;
}  // namespace fsm

/// AXI-Lite interconnect (Burst = false) and its AXI4 extension (Burst = true).
///
/// The CPU-side request crosses a Wishbone-to-AXI bridge (state_wb2axil),
/// then the read or write interconnect FSM (state_fsm0 / state_fsm1), which
/// latches the selection driver and forwards to a slave FSM: state_sram for
/// the ROM/SRAM/MAIN_RAM blocks, state_csr for the CSR bank. Each hop takes
/// one cycle. A slave or interconnect FSM in ERROR answers SLVERR with RDATA
/// forced to zero.
///
/// The AXI variant adds single-beat burst bookkeeping in the bridge and
/// checks every response against the request that produced it; any
/// inconsistency surfaces as SLVERR rather than as plausible data.
template <bool Burst>
class AxiFamilyBus {
public:
    static constexpr std::size_t kStFsm0 = 0, kStFsm1 = 1, kStSram = 2, kStCsr = 3, kStBridge = 4;
    static constexpr std::size_t kSlaveSel = 5, kLastWasRead = 6, kRrReadGrant = 7, kCmdDone = 8, kDataDone = 9;
    static constexpr std::size_t kBeatFirst = 10, kBeatLast = 11, kLastArAwN = 12, kPipeValid = 13;
    static constexpr std::uint32_t kCsrLatency = 2;

    static constexpr BusKind kKind = Burst ? BusKind::Axi : BusKind::AxiLite;

    static std::span<const RegisterDescriptor> register_map() {
        static constexpr RegisterDescriptor regs[] = {
            {"state_fsm0", 3, RegisterGroup::State, kKind},
            {"state_fsm1", 3, RegisterGroup::State, kKind},
            {"state_sram", 3, RegisterGroup::State, kKind},
            {"state_csr", 3, RegisterGroup::State, kKind},
            {"state_wb2axil", 3, RegisterGroup::State, kKind},
            {"slave_sel", 4, RegisterGroup::Selection, kKind},
            {"last_was_read", 1, RegisterGroup::Status, kKind},
            {"rr_read_grant", 1, RegisterGroup::Arbitration, kKind},
            {"cmd_done", 1, RegisterGroup::Completion, kKind},
            {"data_done", 1, RegisterGroup::Completion, kKind},
            {"ax_beat_first", 1, RegisterGroup::Burst, kKind},
            {"ax_beat_last", 1, RegisterGroup::Burst, kKind},
            {"last_ar_aw_n", 1, RegisterGroup::Burst, kKind},
            {"pipe_valid_source", 1, RegisterGroup::Burst, kKind},
        };
        return std::span<const RegisterDescriptor>(regs, Burst ? 14 : 10);
    }

    explicit AxiFamilyBus(const HardeningConfig& hardening = {})
        : regs_(register_map(), hardening), mux_select_(hardening.mux_select) {}

    RegisterFile& registers() { return regs_; }
    const RegisterFile& registers() const { return regs_; }

    bool busy() const { return regs_.get(kStBridge) != fsm::kIdle; }

    std::optional<BusResponse> tick(const MemRequest* pending, MemoryMap& mem, std::uint64_t cycle) {
        const std::uint32_t br = regs_.get(kStBridge);
        const std::uint32_t f0 = regs_.get(kStFsm0);
        const std::uint32_t f1 = regs_.get(kStFsm1);
        const std::array<std::uint32_t, 2> sl{regs_.get(kStSram), regs_.get(kStCsr)};
        const std::uint32_t sel = regs_.get(kSlaveSel);
        const std::uint32_t last_was_read = regs_.get(kLastWasRead);
        const std::uint32_t grant = regs_.get(kRrReadGrant);
        const std::uint32_t cmd_done = regs_.get(kCmdDone);
        const std::uint32_t data_done = regs_.get(kDataDone);
        const std::uint32_t beat_first = Burst ? regs_.get(kBeatFirst) : 1u;
        const std::uint32_t beat_last = Burst ? regs_.get(kBeatLast) : 1u;
        const std::uint32_t ar_aw_n = Burst ? regs_.get(kLastArAwN) : 0u;
        const std::uint32_t pipe_valid = Burst ? regs_.get(kPipeValid) : 1u;

        Next n{br, f0, f1, sl, sel, last_was_read, grant, cmd_done, data_done, beat_first, beat_last, ar_aw_n,
               pipe_valid};

        const bool req_read = is_read(bridge_req_.kind);
        const bool burst_ok = !Burst || (pipe_valid && beat_first && ar_aw_n == (req_read ? 1u : 0u));
        const bool ar_offer = br == fsm::kAddr && req_read && !cmd_done && burst_ok;
        const bool aw_offer = br == fsm::kAddr && !req_read && !cmd_done && burst_ok;
        const bool w_offer = (br == fsm::kAddr || br == fsm::kResp) && !req_read && !data_done;

        std::optional<Delivery> r_channel;
        std::optional<Delivery> b_channel;

        // Read interconnect.
        switch (f0) {
            case fsm::kIdle:
                if (ar_offer) {
                    const std::uint32_t want = master_id(bridge_req_.kind);
                    if (grant == want) {
                        accept(read_path_, n, n.f0);
                        if (Burst) n.beat_first = 0, n.pipe_valid = 0;
                    } else {
                        n.grant = want;
                    }
                }
                break;
            case fsm::kAddr:
                forward(read_path_, sel, sl, n, n.f0);
                break;
            case fsm::kResp:
                r_channel = collect(read_path_, sel, sl, n, n.f0, grant);
                break;
            case fsm::kError:
                if (read_path_.valid && br != fsm::kResp) break;  // holds the response until taken
                r_channel = Delivery{0, read_path_.decerr ? BusStatus::DecErr : BusStatus::SlvErr, grant, sel};
                read_path_.valid = false;
                n.f0 = fsm::kIdle;
                break;
            default:
                break;
        }

        // Write interconnect.
        switch (f1) {
            case fsm::kIdle:
                if (aw_offer) {
                    accept(write_path_, n, n.f1);
                    write_path_.w_received = false;
                    if (Burst) n.beat_first = 0, n.pipe_valid = 0;
                }
                break;
            case fsm::kAddr:
                if (!write_path_.w_received) {
                    if (w_offer) {
                        write_path_.w_received = true;
                        write_path_.data = bridge_req_.store_data;
                        write_path_.lanes = bridge_req_.byte_lanes;
                        n.data_done = 1;
                    }
                } else {
                    forward(write_path_, sel, sl, n, n.f1);
                }
                break;
            case fsm::kResp:
                b_channel = collect(write_path_, sel, sl, n, n.f1, 1);
                break;
            case fsm::kError:
                if (write_path_.valid && br != fsm::kResp) break;
                b_channel = Delivery{0, write_path_.decerr ? BusStatus::DecErr : BusStatus::SlvErr, 1, sel};
                write_path_.valid = false;
                n.f1 = fsm::kIdle;
                break;
            default:
                break;
        }

        // Slaves perform the access one cycle after accepting it.
        for (std::size_t s = 0; s < 2; ++s) {
            if (sl[s] != fsm::kAddr) continue;
            auto& slave = slaves_[s];
            if (s == 1 && ++slave.wait < kCsrLatency) continue;
            if (!slave.cmd_valid) {
                // Woken without a command: answers with its cleared data register.
                slave.rdata = 0;
            } else if (slave.is_write) {
                for (std::size_t b = 0; b < kRegionCount; ++b) {
                    if (slave.blocks & (1u << b))
                        mem.slave_write(static_cast<Region>(b), slave.address, slave.data, slave.lanes);
                }
                slave.rdata = 0;
            } else {
                std::uint32_t word = 0;
                for (std::size_t b = 0; b < kRegionCount; ++b) {
                    if (slave.blocks & (1u << b)) word |= mem.slave_word(static_cast<Region>(b), slave.address);
                }
                slave.rdata = word;
            }
            slave.rdata_valid = slave.cmd_valid;
            n.sl[s] = fsm::kResp;
        }

        // Bridge.
        std::optional<BusResponse> out;
        switch (br) {
            case fsm::kIdle:
                if (pending && pending->seq != last_completed_seq_) {
                    bridge_req_ = *pending;
                    const bool rd = is_read(pending->kind);
                    n.last_was_read = rd ? 1 : 0;
                    n.cmd_done = 0;
                    n.data_done = 0;
                    if (Burst) {
                        n.pipe_valid = 1;
                        n.beat_first = 1;
                        n.beat_last = 1;
                        n.ar_aw_n = rd ? 1 : 0;
                    }
                    n.br = fsm::kAddr;
                }
                break;
            case fsm::kAddr:
                if (Burst && ((cmd_done && beat_first) || ar_aw_n != (req_read ? 1u : 0u))) {
                    n.br = fsm::kError;
                } else if (cmd_done && (req_read || data_done)) {
                    n.br = fsm::kResp;
                }
                break;
            case fsm::kResp: {
                if (Burst && beat_first) {
                    n.br = fsm::kError;
                    break;
                }
                const auto& channel = last_was_read ? r_channel : b_channel;
                if (channel && channel->master == master_id(bridge_req_.kind)) {
                    if (Burst && !beat_last) break;  // waits for a beat that never comes
                    out = finish(channel->data, channel->status, channel->select, cycle);
                    n.br = fsm::kIdle;
                }
                break;
            }
            case fsm::kError:
                out = finish(0, BusStatus::SlvErr, sel, cycle);
                n.br = fsm::kIdle;
                break;
            default:
                break;
        }

        commit(n);
        return out;
    }

private:
    struct Next {
        std::uint32_t br, f0, f1;
        std::array<std::uint32_t, 2> sl;
        std::uint32_t sel, last_was_read, grant, cmd_done, data_done;
        std::uint32_t beat_first, beat_last, ar_aw_n, pipe_valid;
    };

    struct PathLatch {
        std::uint32_t address = 0;
        bool is_write = false;
        bool decerr = false;
        bool w_received = false;
        bool valid = false;  // holds a command not yet answered
        std::uint32_t data = 0;
        std::uint8_t lanes = 0xF;
    };

    struct SlaveLatch {
        std::uint32_t address = 0;
        bool is_write = false;
        std::uint32_t data = 0;
        std::uint8_t lanes = 0xF;
        std::uint32_t blocks = 0;
        std::uint32_t rdata = 0;
        bool rdata_valid = false;
        bool cmd_valid = false;
        std::uint32_t wait = 0;
    };

    struct Delivery {
        std::uint32_t data;
        BusStatus status;
        std::uint32_t master;
        std::uint32_t select;
    };

    static constexpr std::uint32_t master_id(AccessKind k) { return k == AccessKind::Fetch ? 0u : 1u; }

    void accept(PathLatch& path, Next& n, std::uint32_t& path_state) {
        path.address = bridge_req_.address;
        path.is_write = !is_read(bridge_req_.kind);
        path.data = bridge_req_.store_data;
        path.lanes = bridge_req_.byte_lanes;
        const std::uint32_t decoded = select_for(bridge_req_.address);
        path.decerr = decoded == 0;
        path.valid = true;
        n.sel = decoded;
        n.cmd_done = 1;
        path_state = path.decerr ? fsm::kError : fsm::kAddr;
    }

    std::uint32_t routed(std::uint32_t sel) const {
        if (!mux_select_ || sel == 0) return sel;
        return sel & (~sel + 1u);
    }

    static constexpr std::uint32_t kMemBlocks = 0b0111;
    static constexpr std::uint32_t kCsrBlock = 0b1000;

    void forward(const PathLatch& path, std::uint32_t sel, const std::array<std::uint32_t, 2>& sl, Next& n,
                 std::uint32_t& path_state) {
        const std::uint32_t eff = routed(sel);
        if (eff == 0) return;
        if (Burst && eff != select_for(path.address)) return;
        const std::array<std::uint32_t, 2> blocks{eff & kMemBlocks, eff & kCsrBlock};
        for (std::size_t s = 0; s < 2; ++s) {
            if (!blocks[s] || sl[s] != fsm::kIdle) continue;
            auto& slave = slaves_[s];
            slave.address = path.address;
            slave.is_write = path.is_write;
            slave.data = path.data;
            slave.lanes = path.lanes;
            slave.blocks = blocks[s];
            slave.wait = 0;
            slave.cmd_valid = path.valid;
            n.sl[s] = fsm::kAddr;
        }
        path_state = fsm::kResp;
    }

    std::optional<Delivery> collect(PathLatch& path, std::uint32_t sel, const std::array<std::uint32_t, 2>& sl,
                                    Next& n, std::uint32_t& path_state, std::uint32_t master) {
        const std::uint32_t eff = routed(sel);
        const std::array<bool, 2> selected{(eff & kMemBlocks) != 0, (eff & kCsrBlock) != 0};
        for (std::size_t s = 0; s < 2; ++s) {
            if (selected[s] && sl[s] == fsm::kAddr) return std::nullopt;  // still accessing
        }
        bool valid = false;
        std::uint32_t data = 0;
        BusStatus status = BusStatus::Ok;
        for (std::size_t s = 0; s < 2; ++s) {
            if (!selected[s]) continue;
            auto& slave = slaves_[s];
            if (sl[s] == fsm::kResp) {
                const bool consistent =
                    !Burst || (slave.rdata_valid && slave.address == path.address && slave.is_write == path.is_write);
                if (consistent) {
                    data |= slave.rdata;
                } else {
                    status = BusStatus::SlvErr;
                }
            } else if (sl[s] == fsm::kError) {
                status = BusStatus::SlvErr;
            } else {
                continue;
            }
            valid = true;
            slave.rdata = 0;
            slave.rdata_valid = false;
            slave.cmd_valid = false;
            n.sl[s] = fsm::kIdle;
        }
        if (!valid) return std::nullopt;
        if (status != BusStatus::Ok) data = 0;
        path_state = fsm::kIdle;
        path.valid = false;
        return Delivery{data, status, master, eff};
    }

    std::optional<BusResponse> finish(std::uint32_t data, BusStatus status, std::uint32_t select,
                                      std::uint64_t cycle) {
        if (bridge_req_.seq == last_completed_seq_) return std::nullopt;  // phantom transaction
        last_completed_seq_ = bridge_req_.seq;
        return BusResponse{data, status, select, cycle};
    }

    void commit(const Next& n) {
        regs_.set(kStBridge, n.br);
        regs_.set(kStFsm0, n.f0);
        regs_.set(kStFsm1, n.f1);
        regs_.set(kStSram, n.sl[0]);
        regs_.set(kStCsr, n.sl[1]);
        regs_.set(kSlaveSel, n.sel);
        regs_.set(kLastWasRead, n.last_was_read);
        regs_.set(kRrReadGrant, n.grant);
        regs_.set(kCmdDone, n.cmd_done);
        regs_.set(kDataDone, n.data_done);
        if constexpr (Burst) {
            regs_.set(kBeatFirst, n.beat_first);
            regs_.set(kBeatLast, n.beat_last);
            regs_.set(kLastArAwN, n.ar_aw_n);
            regs_.set(kPipeValid, n.pipe_valid);
        }
    }

    RegisterFile regs_;
    bool mux_select_ = false;
    MemRequest bridge_req_{};
    std::uint64_t last_completed_seq_ = 0;
    PathLatch read_path_;
    PathLatch write_path_;
    std::array<SlaveLatch, 2> slaves_{};
};

using AxiLiteBus = AxiFamilyBus<false>;
using AxiBus = AxiFamilyBus<true>;

}  // namespace busfi

#endif
