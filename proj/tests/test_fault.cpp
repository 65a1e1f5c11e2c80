#include <gtest/gtest.h>

#include <set>

#include "busfi/soc.hpp"

using namespace busfi;

namespace {

EnumerationSpace one_cycle(BusKind bus, FaultModelKind model, std::vector<std::string> regs = {}) {
    EnumerationSpace sp;
    sp.bus = bus;
    sp.model = model;
    sp.cycle_first = sp.cycle_last = 40;
    sp.registers = std::move(regs);
    return sp;
}

// Brute force: every (target, mask) and (target, mask, target, mask) tuple that
// validate_spec accepts, as text, for a single cycle.
std::set<std::string> oracle(const EnumerationSpace& sp) {
    const auto descs = register_map(sp.bus);
    const RegisterFile regs(descs, HardeningConfig{sp.tmr_registers, false});
    std::vector<FaultTarget> phys;
    for (const auto& d : descs) {
        if (!sp.registers.empty() &&
            std::find(sp.registers.begin(), sp.registers.end(), std::string(d.name)) == sp.registers.end())
            continue;
        const unsigned copies = sp.tmr_registers.count(std::string(d.name)) ? 3 : 1;
        for (unsigned r = 0; r < copies; ++r) phys.push_back({std::string(d.name), 0, r, d.width});
    }
    std::set<std::string> out;
    auto try_add = [&](FaultSpec spec) {
        try {
            validate_spec(spec, regs, sp.max_flips);
            spec.bus = sp.bus;
            out.insert(format_spec(spec));
        } catch (const FaultError&) {
        }
    };
    for (std::size_t i = 0; i < phys.size(); ++i) {
        for (std::uint32_t m1 = 1; m1 <= width_mask(phys[i].width); ++m1) {
            FaultTarget a = phys[i];
            a.mask = m1;
            try_add(FaultSpec{sp.model, std::nullopt, sp.cycle_first, {a}});
            for (std::size_t j = i + 1; j < phys.size(); ++j) {
                for (std::uint32_t m2 = 1; m2 <= width_mask(phys[j].width); ++m2) {
                    FaultTarget b = phys[j];
                    b.mask = m2;
                    try_add(FaultSpec{sp.model, std::nullopt, sp.cycle_first, {a, b}});
                }
            }
        }
    }
    return out;
}

std::set<std::string> stream(const EnumerationSpace& sp) {
    std::set<std::string> out;
    for (const auto& s : FaultEnumerator(sp, register_map(sp.bus)).materialize()) out.insert(format_spec(s));
    return out;
}

}  // namespace

TEST(Enumeration, BitFlipOverFourBitRegister) {
    const auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::BitFlip, {"ACK"});
    EXPECT_EQ(space_size(sp, register_map(sp.bus)), 4u);
    EXPECT_EQ(FaultEnumerator(sp, register_map(sp.bus)).size(), 4u);
    EXPECT_EQ(oracle(sp).size(), 4u);
}

TEST(Enumeration, ManipulateRegisterOverFourBitRegister) {
    const auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::ManipulateRegister, {"ACK"});
    EXPECT_EQ(space_size(sp, register_map(sp.bus)), 15u);
    EXPECT_EQ(stream(sp), oracle(sp));
}

TEST(Enumeration, TwoBitFlipsOverWidthsFourAndOne) {
    const auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::TwoBitFlips, {"ACK", "done"});
    EXPECT_EQ(space_size(sp, register_map(sp.bus)), 10u);
    const auto brute = oracle(sp);
    EXPECT_EQ(brute.size(), 10u);
    EXPECT_EQ(stream(sp), brute);
}

TEST(Enumeration, DoublingTheWindowDoublesTheSize) {
    for (auto bus : kAllBuses) {
        for (auto model : kAllModels) {
            auto sp = one_cycle(bus, model);
            sp.cycle_first = 10;
            sp.cycle_last = 19;
            const auto n = space_size(sp, register_map(bus));
            sp.cycle_last = 29;
            EXPECT_EQ(space_size(sp, register_map(bus)), 2 * n);
        }
    }
}

TEST(Enumeration, AxiSpaceIsAtLeastAxiLiteSpace) {
    for (auto model : kAllModels) {
        const auto lite = one_cycle(BusKind::AxiLite, model);
        const auto full = one_cycle(BusKind::Axi, model);
        EXPECT_GE(space_size(full, register_map(BusKind::Axi)), space_size(lite, register_map(BusKind::AxiLite)));
    }
}

TEST(Enumeration, EmptySpaceIsAnError) {
    auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::ManipulateTwoRegisters, {"ACK"});
    EXPECT_THROW(FaultEnumerator(sp, register_map(sp.bus)), FaultError);
    sp.registers = {"nope"};
    EXPECT_THROW(FaultEnumerator(sp, register_map(sp.bus)), FaultError);
    sp.registers.clear();
    sp.cycle_last = sp.cycle_first - 1;
    EXPECT_THROW(FaultEnumerator(sp, register_map(sp.bus)), FaultError);
}

TEST(Enumeration, OrderIsCycleThenTargetThenMask) {
    auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::BitFlip);
    sp.cycle_last = 41;
    const auto all = FaultEnumerator(sp, register_map(sp.bus)).materialize();
    ASSERT_EQ(all.size(), 2u * (4 + 4 + 1 + 2));
    EXPECT_EQ(format_spec(all[0]), "model=BF bus=WB cycle=40 tgt=ACK:0b0001");
    EXPECT_EQ(format_spec(all[1]), "model=BF bus=WB cycle=40 tgt=ACK:0b0010");
    EXPECT_EQ(all[4].targets[0].reg, "SEL");
    EXPECT_EQ(all[11].cycle, 41u);
}

TEST(EnumerationProperty, StreamMatchesBruteForceAndClosedForm) {
    for (auto bus : kAllBuses) {
        for (auto model : kAllModels) {
            for (unsigned cap : {1u, 2u, 4u}) {
                auto sp = one_cycle(bus, model);
                sp.max_flips = cap;
                const auto brute = oracle(sp);
                EXPECT_EQ(space_size(sp, register_map(bus)), brute.size())
                    << bus_name(bus) << " " << model_code(model) << " cap " << cap;
                if (brute.empty()) continue;
                const FaultEnumerator en(sp, register_map(bus));
                EXPECT_EQ(en.size(), brute.size());
                EXPECT_EQ(stream(sp), brute);
            }
        }
    }
}

TEST(EnumerationProperty, TmrReplicasAreSeparateTargets) {
    for (auto model : kAllModels) {
        auto sp = one_cycle(BusKind::Wishbone, model, {"ACK", "done"});
        sp.tmr_registers = {"ACK"};
        const auto brute = oracle(sp);
        EXPECT_EQ(space_size(sp, register_map(sp.bus)), brute.size()) << model_code(model);
        EXPECT_EQ(stream(sp), brute);
    }
}

TEST(EnumerationProperty, UnrankIsABijection) {
    auto sp = one_cycle(BusKind::AxiLite, FaultModelKind::ManipulateTwoRegisters);
    sp.cycle_last = sp.cycle_first + 2;
    const FaultEnumerator en(sp, register_map(sp.bus));
    std::set<std::string> seen;
    for (std::uint64_t i = 0; i < en.size(); ++i) ASSERT_TRUE(seen.insert(format_spec(en.unrank(i))).second);
    EXPECT_EQ(seen.size(), en.space_size());
}

TEST(Sampling, ReproducibleDistinctAndInRange) {
    auto sp = one_cycle(BusKind::Axi, FaultModelKind::TwoBitFlips);
    sp.cycle_first = 0;
    sp.cycle_last = 99;
    sp.mode = EnumerationMode::Sampled;
    sp.seed = 1234;
    sp.samples = 500;
    const FaultEnumerator a(sp, register_map(sp.bus)), b(sp, register_map(sp.bus));
    ASSERT_EQ(a.size(), 500u);
    std::set<std::uint64_t> idx;
    for (std::uint64_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.index_of(i), b.index_of(i));
        EXPECT_LT(a.index_of(i), a.space_size());
        idx.insert(a.index_of(i));
    }
    EXPECT_EQ(idx.size(), 500u);
    sp.seed = 1235;
    const FaultEnumerator c(sp, register_map(sp.bus));
    bool differs = false;
    for (std::uint64_t i = 0; i < c.size(); ++i) differs |= c.index_of(i) != a.index_of(i);
    EXPECT_TRUE(differs);
}

TEST(Sampling, OversizedSampleIsTheWholeSpace) {
    auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::BitFlip);
    sp.mode = EnumerationMode::Sampled;
    sp.samples = 1000;
    const FaultEnumerator en(sp, register_map(sp.bus));
    EXPECT_EQ(en.size(), en.space_size());
}

TEST(Sampling, RoughlyUniformOverCycles) {
    auto sp = one_cycle(BusKind::Wishbone, FaultModelKind::BitFlip);
    sp.cycle_first = 0;
    sp.cycle_last = 999;
    sp.mode = EnumerationMode::Sampled;
    sp.seed = 7;
    sp.samples = 2000;
    const FaultEnumerator en(sp, register_map(sp.bus));
    std::size_t first_half = 0;
    for (std::uint64_t i = 0; i < en.size(); ++i) first_half += en[i].cycle < 500;
    // Hypergeometric mean 1000, sd about 21.
    EXPECT_NEAR(static_cast<double>(first_half), 1000.0, 120.0);
}

TEST(ApplyFault, XorsOnlyAtTheInjectionCycle) {
    RegisterFile regs(WishboneBus::register_map(), {});
    regs.write("ACK", 0b0101);
    const auto spec = parse_spec("model=MR cycle=5 tgt=ACK:0b0011");
    EXPECT_FALSE(apply_fault(regs, spec, 4));
    EXPECT_EQ(regs.read("ACK"), 0b0101u);
    EXPECT_TRUE(apply_fault(regs, spec, 5));
    EXPECT_EQ(regs.read("ACK"), 0b0110u);
}

TEST(ApplyFault, TwoRegistersChangeTogether) {
    RegisterFile regs(AxiLiteBus::register_map(), {});
    regs.write("state_sram", fsm::kAddr);
    regs.write("cmd_done", 0);
    auto spec = parse_spec("model=M2R cycle=9 tgt=state_sram:0b010,tgt2=cmd_done:0b1");
    validate_spec(spec, regs);
    ASSERT_TRUE(apply_fault(regs, spec, 9));
    EXPECT_EQ(regs.read("state_sram"), fsm::kResp);
    EXPECT_EQ(regs.read("cmd_done"), 1u);
}

TEST(ApplyFault, ReplicaTargetOnlyTouchesThatCopy) {
    RegisterFile regs(WishboneBus::register_map(), HardeningConfig{{"SEL"}, false});
    regs.write("SEL", 0b0010);
    auto spec = parse_spec("model=BF cycle=0 tgt=SEL@2:0b0100");
    validate_spec(spec, regs);
    apply_fault(regs, spec, 0);
    const auto i = regs.index_of("SEL");
    EXPECT_EQ(regs.replica(i, 0), 0b0010u);
    EXPECT_EQ(regs.replica(i, 2), 0b0110u);
    EXPECT_EQ(regs.read("SEL"), 0b0010u);
}

TEST(SpecText, FormatParseRoundTrip) {
    for (auto bus : kAllBuses) {
        for (auto model : kAllModels) {
            auto sp = one_cycle(bus, model);
            for (const auto& s : FaultEnumerator(sp, register_map(bus)).materialize()) {
                const auto back = parse_spec(format_spec(s));
                ASSERT_EQ(back, s);
                ASSERT_EQ(format_spec(back), format_spec(s));
            }
        }
    }
}

TEST(SpecText, ParseAcceptsLongModelNamesAndBus) {
    const auto s = parse_spec("model=BIT_FLIP bus=AXI cycle=3 tgt=cmd_done:0b1");
    EXPECT_EQ(s.model, FaultModelKind::BitFlip);
    EXPECT_EQ(s.bus, BusKind::Axi);
    EXPECT_EQ(s.cycle, 3u);
    ASSERT_EQ(s.targets.size(), 1u);
    EXPECT_EQ(s.targets[0].mask, 1u);
}

TEST(SpecText, MalformedSpecsThrow) {
    EXPECT_THROW(parse_spec("model=BF tgt=ACK:0b1"), FaultError);
    EXPECT_THROW(parse_spec("model=XX cycle=1 tgt=ACK:0b1"), FaultError);
    EXPECT_THROW(parse_spec("model=BF cycle=1"), FaultError);
    EXPECT_THROW(parse_spec("model=BF cycle=1 tgt=ACK"), FaultError);
    EXPECT_THROW(parse_spec("model=BF cycle=1 tgt=ACK:0b1 color=red"), FaultError);
}

TEST(Validate, ModelInvariants) {
    const RegisterFile wb(WishboneBus::register_map(), {});
    auto bad = [&](const char* text, unsigned cap = kDefaultMaxFlips) {
        auto s = parse_spec(text);
        EXPECT_THROW(validate_spec(s, wb, cap), FaultError) << text;
    };
    bad("model=BF cycle=1 tgt=ACK:0b0011");
    bad("model=BF cycle=1 tgt=ACK:0b0001,tgt2=SEL:0b0001");
    bad("model=MR cycle=1 tgt=ACK:0b0");
    bad("model=MR cycle=1 tgt=done:0b10");
    bad("model=MR cycle=1 tgt=ACK:0b1111", 3);
    bad("model=2BF cycle=1 tgt=ACK:0b0001");
    bad("model=2BF cycle=1 tgt=ACK:0b0011,tgt2=SEL:0b0001");
    bad("model=M2R cycle=1 tgt=ACK:0b0011");
    bad("model=M2R cycle=1 tgt=ACK:0b0001,tgt2=ACK:0b0010");
    bad("model=M2R cycle=1 tgt=ACK:0b0111,tgt2=SEL:0b0011");
    bad("model=BF cycle=1 tgt=nope:0b1");
    bad("model=BF cycle=1 tgt=ACK@1:0b0001");

    auto ok = parse_spec("model=2BF cycle=1 tgt=ACK:0b0001,tgt2=done:0b1");
    EXPECT_NO_THROW(validate_spec(ok, wb));
    EXPECT_EQ(ok.targets[1].width, 1u);
}
