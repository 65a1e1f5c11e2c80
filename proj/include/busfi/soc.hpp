#ifndef BUSFI_SOC_HPP
#define BUSFI_SOC_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "busfi/axi.hpp"
#include "busfi/benchmark.hpp"
#include "busfi/bus_types.hpp"
#include "busfi/fault.hpp"
#include "busfi/isa.hpp"
#include "busfi/memory_map.hpp"
#include "busfi/register_file.hpp"
#include "busfi/wishbone.hpp"

namespace busfi {

using AnyBus = std::variant<WishboneBus, AxiLiteBus, AxiBus>;

inline AnyBus make_bus(BusKind kind, const HardeningConfig& hardening = {}) {
    switch (kind) {
        case BusKind::Wishbone: return WishboneBus(hardening);
        case BusKind::AxiLite: return AxiLiteBus(hardening);
        case BusKind::Axi: return AxiBus(hardening);
    }
    throw std::invalid_argument("unknown bus kind");
}

inline std::span<const RegisterDescriptor> register_map(BusKind kind) {
    switch (kind) {
        case BusKind::Wishbone: return WishboneBus::register_map();
        case BusKind::AxiLite: return AxiLiteBus::register_map();
        case BusKind::Axi: return AxiBus::register_map();
    }
    return {};
}

enum class TraceKind : std::uint8_t { Fetch, Load, Store };

constexpr std::string_view trace_kind_name(TraceKind k) {
    switch (k) {
        case TraceKind::Fetch: return "FETCH";
        case TraceKind::Load: return "LOAD";
        case TraceKind::Store: return "STORE";
    }
    return "?";
}

constexpr TraceKind trace_kind_of(AccessKind k) {
    switch (k) {
        case AccessKind::Fetch: return TraceKind::Fetch;
        case AccessKind::LoadWord:
        case AccessKind::LoadByte: return TraceKind::Load;
        default: return TraceKind::Store;
    }
}

/// One completed bus transaction as seen by the CPU.
struct TraceRecord {
    std::uint64_t cycle = 0;        // completion cycle
    std::uint64_t issue_cycle = 0;  // cycle the request was first presented
    TraceKind kind = TraceKind::Fetch;
    std::uint32_t address = 0;
    std::uint32_t data = 0;  // read data, or the store data for stores
    std::uint32_t select = 0;
    BusStatus status = BusStatus::Ok;

    std::uint64_t latency() const { return cycle - issue_cycle; }

    /// Lowest selected slave, if any was selected.
    std::optional<Region> slave() const {
        for (std::size_t i = 0; i < kRegionCount; ++i)
            if (select & (1u << i)) return static_cast<Region>(i);
        return std::nullopt;
    }
};

struct InjectionNote {
    std::uint64_t cycle = 0;
    std::string reg;
    unsigned replica = 0;
    std::uint32_t mask = 0;
    std::uint32_t before = 0;  // voted value
    std::uint32_t after = 0;
};

enum class Termination : std::uint8_t { Halted, Timeout, Trapped };

constexpr std::string_view termination_name(Termination t) {
    switch (t) {
        case Termination::Halted: return "HALTED";
        case Termination::Timeout: return "TIMEOUT";
        case Termination::Trapped: return "TRAPPED";
    }
    return "?";
}

struct SimResult {
    Termination termination = Termination::Halted;
    std::uint64_t cycles = 0;
    MemoryMap final_memory;
    std::uint32_t g_authenticated = 0;
    std::optional<TrapCause> trap;
    std::vector<TraceRecord> trace;
    std::vector<InjectionNote> injections;
};

inline constexpr std::uint64_t kGoldenBudget = 1'000'000;

/// CPU, one interconnect and the memory map, loaded with a program.
class Soc {
public:
    Soc(BusKind kind, Program program, HardeningConfig hardening = {})
        : kind_(kind), program_(std::move(program)), hardening_(std::move(hardening)),
          bus_(make_bus(kind_, hardening_)) {
        std::vector<std::uint8_t> rom;
        rom.reserve(program_.rom_image.size() * 4);
        for (auto w : program_.rom_image)
            for (unsigned b = 0; b < 4; ++b) rom.push_back(static_cast<std::uint8_t>(w >> (8 * b)));
        load_image(program_.rom_base, rom);
        load_image(program_.data_base, program_.data_image);
        cpu_.pc = program_.rom_base;
    }

    BusKind kind() const { return kind_; }
    const Program& program() const { return program_; }
    const HardeningConfig& hardening() const { return hardening_; }
    const MemoryMap& memory() const { return memory_; }
    std::span<const RegisterDescriptor> registers() const { return register_map(kind_); }

    RegisterFile& bus_registers() {
        return std::visit([](auto& b) -> RegisterFile& { return b.registers(); }, bus_);
    }

    /// Runs a fresh copy of the loaded SoC; the SoC itself is not modified.
    SimResult simulate(const std::optional<FaultSpec>& fault = std::nullopt,
                       std::uint64_t budget = kGoldenBudget) const {
        Soc run = *this;
        return run.execute(fault, budget);
    }

    SimResult golden(std::uint64_t budget = kGoldenBudget) const { return simulate(std::nullopt, budget); }

private:
    void load_image(std::uint32_t base, std::span<const std::uint8_t> bytes) {
        if (bytes.empty()) return;
        auto region = decode_address(base);
        if (!region) throw std::invalid_argument("image base outside the memory map");
        memory_.load(*region, base - region_info(*region).base, bytes);
    }

    struct Port {
        Soc& soc;
        const std::optional<FaultSpec>& fault;
        std::uint64_t budget;
        std::uint64_t cycle = 0;
        std::uint64_t seq = 0;
        SimResult* out;

        void maybe_inject() {
            if (!fault || fault->cycle != cycle) return;
            RegisterFile& regs = soc.bus_registers();
            for (const auto& t : fault->targets) {
                const auto idx = regs.index_of(t.reg);
                InjectionNote note{cycle, t.reg, t.replica, t.mask, regs.get(idx), 0};
                regs.flip(idx, t.mask, t.replica);
                note.after = regs.get(idx);
                out->injections.push_back(note);
            }
        }

        std::optional<BusResponse> tick(const MemRequest* req) {
            maybe_inject();
            auto r = std::visit([&](auto& b) { return b.tick(req, soc.memory_, cycle); }, soc.bus_);
            ++cycle;
            return r;
        }

        std::optional<MemResponse> transact(const MemRequest& req) {
            MemRequest q = req;
            q.seq = ++seq;
            const std::uint64_t issued = cycle;
            while (cycle < budget) {
                if (auto r = tick(&q)) {
                    const bool store = !is_read(q.kind);
                    out->trace.push_back(TraceRecord{r->completion_cycle, issued, trace_kind_of(q.kind), q.address,
                                                     store ? q.store_data : r->data, r->select, r->status});
                    return MemResponse{r->data, r->status, static_cast<std::uint32_t>(cycle - issued)};
                }
            }
            return std::nullopt;
        }

        bool idle() {
            if (cycle >= budget) return false;
            tick(nullptr);
            return true;
        }
    };

    SimResult execute(const std::optional<FaultSpec>& fault, std::uint64_t budget) {
        SimResult res;
        Port port{*this, fault, budget, 0, 0, &res};
        CpuEvent ev = CpuEvent::Executed;
        while (port.cycle < budget) {
            ev = step(cpu_, port);
            if (ev != CpuEvent::Executed) break;
        }
        res.cycles = port.cycle;
        if (ev == CpuEvent::Trapped && port.cycle < budget) {
            res.termination = Termination::Trapped;
            res.trap = cpu_.trap;
        } else if (ev == CpuEvent::Halted && port.cycle < budget) {
            res.termination = Termination::Halted;
        } else {
            // Budget exhausted, including a halt on the very last cycle.
            res.termination = Termination::Timeout;
            res.cycles = budget;
        }
        res.final_memory = memory_;
        const std::uint32_t auth = program_.symbol("g_authenticated");
        res.g_authenticated = res.final_memory.peek_word(auth).value_or(0);
        return res;
    }

    BusKind kind_;
    Program program_;
    HardeningConfig hardening_;
    AnyBus bus_;
    MemoryMap memory_;
    CpuState cpu_;
};

inline Soc build_soc(BusKind kind, const Program& program = verifypin(), const HardeningConfig& hardening = {}) {
    return Soc(kind, program, hardening);
}

}  // namespace busfi

#endif
