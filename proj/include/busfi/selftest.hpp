#ifndef BUSFI_SELFTEST_HPP
#define BUSFI_SELFTEST_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "busfi/campaign.hpp"

namespace busfi {

struct SelftestCheck {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Issues one word load with the bus's selection register overwritten by
/// `forced_select` right after the interconnect latched it. Returns the
/// delivered response, or nullopt if none arrived within `max_cycles`.
template <class Bus>
std::optional<BusResponse> forced_select_load(Bus& bus, MemoryMap& mem, std::uint32_t address,
                                              std::uint32_t forced_select, std::uint64_t max_cycles = 64) {
    constexpr std::size_t sel_reg = [] {
        if constexpr (std::is_same_v<Bus, WishboneBus>) return WishboneBus::kSel;
        else return Bus::kSlaveSel;
    }();
    const MemRequest req{AccessKind::LoadWord, address, 0, 0xF, 1};
    bool forced = false;
    for (std::uint64_t c = 0; c < max_cycles; ++c) {
        auto r = bus.tick(&req, mem, c);
        if (r) return r;
        if (!forced && bus.registers().get(sel_reg) != 0) {
            bus.registers().set(sel_reg, forced_select);
            forced = true;
        }
    }
    return std::nullopt;
}

inline MemoryMap random_memory(std::mt19937_64& rng) {
    MemoryMap mem;
    for (const auto& info : kRegions) {
        std::vector<std::uint8_t> bytes(info.size);
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
        mem.load(info.region, 0, bytes);
    }
    return mem;
}

inline std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 1) {
    std::vector<SelftestCheck> out;
    std::mt19937_64 rng(seed);

    for (auto bus : kAllBuses) {
        const auto g = build_soc(bus).golden();
        bool errors = false;
        for (const auto& r : g.trace) errors |= r.status != BusStatus::Ok;
        const bool pass = g.termination == Termination::Halted && g.g_authenticated == 0 && !errors;
        out.push_back({"golden_" + std::string(bus_name(bus)), pass,
                       "termination=" + std::string(termination_name(g.termination)) +
                           " g_authenticated=" + std::to_string(g.g_authenticated) +
                           " cycles=" + std::to_string(g.cycles)});
    }

    {
        int bad = 0;
        for (int i = 0; i < 4096; ++i) {
            const auto w = static_cast<std::uint32_t>(rng());
            if (auto in = decode(w); in && encode(*in) != w) ++bad;
        }
        out.push_back({"isa_roundtrip", bad == 0, std::to_string(bad) + " mismatches"});
    }

    {
        int bad = 0;
        for (auto bus : kAllBuses) {
            HardeningConfig h;
            for (const auto& d : register_map(bus)) h.tmr_registers.emplace(d.name);
            RegisterFile regs(register_map(bus), h);
            for (std::size_t i = 0; i < regs.size(); ++i) {
                const unsigned w = regs.descriptor(i).width;
                const std::uint32_t v = static_cast<std::uint32_t>(rng()) & width_mask(w);
                for (unsigned rep = 0; rep < 3; ++rep) {
                    for (unsigned b = 0; b < w; ++b) {
                        regs.set(i, v);
                        regs.flip(i, 1u << b, rep);
                        if (regs.get(i) != v) ++bad;
                    }
                }
            }
        }
        out.push_back({"tmr_single_replica_outvoted", bad == 0, std::to_string(bad) + " failures"});
    }

    {
        int bad = 0, trials = 0;
        auto trial = [&](auto make_bus) {
            for (int i = 0; i < 250; ++i, ++trials) {
                auto b = make_bus();
                MemoryMap mem = random_memory(rng);
                std::uint32_t mask;
                do mask = static_cast<std::uint32_t>(rng()) & 0xFu;
                while (popcount32(mask) < 2);
                const auto& info = kRegions[rng() % kRegionCount];
                const std::uint32_t addr = info.base + static_cast<std::uint32_t>(rng() % info.size) / 4 * 4;
                std::uint32_t expect = 0;
                for (std::size_t r = 0; r < kRegionCount; ++r)
                    if (mask & (1u << r)) expect |= mem.slave_word(static_cast<Region>(r), addr);
                auto resp = forced_select_load(b, mem, addr, mask);
                if (!resp || resp->data != expect) ++bad;
            }
        };
        trial([] { return WishboneBus{}; });
        trial([] { return AxiLiteBus{}; });
        out.push_back({"multiread_or_fold", bad == 0,
                       std::to_string(bad) + " of " + std::to_string(trials) + " trials differ"});
    }

    {
        int bad = 0;
        for (auto bus : kAllBuses) {
            for (auto model : kAllModels) {
                EnumerationSpace sp;
                sp.bus = bus;
                sp.model = model;
                sp.cycle_first = 10;
                sp.cycle_last = 12;
                FaultEnumerator en(sp, register_map(bus));
                if (en.size() != space_size(sp, register_map(bus))) ++bad;
            }
        }
        out.push_back({"enumeration_size_closed_form", bad == 0, std::to_string(bad) + " mismatches"});
    }
    return out;
}

}  // namespace busfi

#endif
