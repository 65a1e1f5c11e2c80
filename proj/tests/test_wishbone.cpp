#include <gtest/gtest.h>

#include <random>

#include "busfi/selftest.hpp"

using namespace busfi;

namespace {

struct Completion {
    BusResponse resp;
    std::uint64_t cycles;
};

std::optional<Completion> run_one(WishboneBus& bus, MemoryMap& mem, const MemRequest& req,
                                  std::uint64_t max_cycles = 64) {
    for (std::uint64_t c = 0; c < max_cycles; ++c) {
        if (auto r = bus.tick(&req, mem, c)) return Completion{*r, c + 1};
    }
    return std::nullopt;
}

MemRequest load(std::uint32_t addr, std::uint64_t seq = 1) { return {AccessKind::LoadWord, addr, 0, 0xF, seq}; }

}  // namespace

TEST(Wishbone, FaultFreeSramRead) {
    MemoryMap mem;
    mem.slave_write(Region::Sram, 0x1000'0020, 0xCAFE'F00D, 0xF);
    WishboneBus bus;
    auto c = run_one(bus, mem, load(0x1000'0020));
    ASSERT_TRUE(c);
    EXPECT_EQ(c->resp.data, 0xCAFE'F00Du);
    EXPECT_EQ(c->resp.status, BusStatus::Ok);
    EXPECT_EQ(c->resp.select, region_bit(Region::Sram));
    EXPECT_FALSE(bus.busy());
}

TEST(Wishbone, CsrIsSlowerThanSram) {
    MemoryMap mem;
    WishboneBus a, b;
    const auto sram = run_one(a, mem, load(0x1000'0000));
    const auto csr = run_one(b, mem, load(0xF000'0000));
    ASSERT_TRUE(sram && csr);
    EXPECT_EQ(csr->cycles, sram->cycles + 1);
}

TEST(Wishbone, StoreWritesSelectedLanes) {
    MemoryMap mem;
    WishboneBus bus;
    ASSERT_TRUE(run_one(bus, mem, MemRequest{AccessKind::StoreByte, 0x1000'0041, 0x0000'AB00, 0b0010, 1}));
    EXPECT_EQ(mem.peek_word(0x1000'0040), 0x0000'AB00u);
}

TEST(Wishbone, MultiHotSelectOrsSlaveData) {
    MemoryMap mem;
    mem.slave_write(Region::Sram, 0x10, 0x0000'000F, 0xF);
    mem.slave_write(Region::Csr, 0x10, 0x0000'00F0, 0xF);
    WishboneBus bus;
    const std::uint32_t both = region_bit(Region::Sram) | region_bit(Region::Csr);
    auto r = forced_select_load(bus, mem, 0x1000'0010, both);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->data, 0xFFu);
    EXPECT_EQ(r->select, both);
}

TEST(Wishbone, MuxSelectServesLowestSlaveOnly) {
    MemoryMap mem;
    mem.slave_write(Region::Sram, 0x10, 0x0000'000F, 0xF);
    mem.slave_write(Region::Csr, 0x10, 0x0000'00F0, 0xF);
    WishboneBus bus(HardeningConfig{{}, true});
    auto r = forced_select_load(bus, mem, 0x1000'0010, region_bit(Region::Sram) | region_bit(Region::Csr));
    ASSERT_TRUE(r);
    EXPECT_EQ(r->data, 0x0Fu);
    EXPECT_EQ(r->select, region_bit(Region::Sram));
}

TEST(Wishbone, DoneForcesAllOnesError) {
    MemoryMap mem;
    WishboneBus bus;
    const auto req = load(0x1000'0000);
    EXPECT_FALSE(bus.tick(&req, mem, 0));
    bus.registers().flip(WishboneBus::kDone, 1);
    auto r = bus.tick(&req, mem, 1);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->data, 0xFFFF'FFFFu);
    EXPECT_EQ(r->status, BusStatus::WbErr);
}

TEST(Wishbone, EmptySelectTimesOut) {
    MemoryMap mem;
    WishboneBus bus;
    const auto req = load(0x1000'0000);
    EXPECT_FALSE(bus.tick(&req, mem, 0));
    // Drop both the latched select and the acknowledge it already produced.
    bus.registers().set(WishboneBus::kSel, 0);
    bus.registers().set(WishboneBus::kAck, 0);
    std::optional<BusResponse> r;
    std::uint64_t c = 1;
    for (; c < 64 && !r; ++c) r = bus.tick(&req, mem, c);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, BusStatus::WbErr);
    EXPECT_EQ(r->data, reset_constant(BusKind::Wishbone));
    EXPECT_GE(c, WishboneBus::kTimeoutCycles);
}

TEST(Wishbone, StrayGrantStallsOneCycle) {
    MemoryMap mem;
    WishboneBus clean, faulted;
    const auto ref = run_one(clean, mem, load(0x1000'0000));
    faulted.registers().flip(WishboneBus::kGrant, 0b01);
    const auto got = run_one(faulted, mem, load(0x1000'0000));
    ASSERT_TRUE(ref && got);
    EXPECT_EQ(got->cycles, ref->cycles + 1);
    EXPECT_EQ(got->resp.data, ref->resp.data);
}

TEST(Wishbone, EarlyAckReturnsStaleReadPort) {
    MemoryMap mem;
    mem.slave_write(Region::Sram, 0x1000'0000, 0x1111'1111, 0xF);
    mem.slave_write(Region::Sram, 0x1000'0004, 0x2222'2222, 0xF);
    WishboneBus bus;
    ASSERT_EQ(run_one(bus, mem, load(0x1000'0000, 1))->resp.data, 0x1111'1111u);
    const auto req = load(0x1000'0004, 2);
    // ACK forced before the slave has sampled the new address.
    bus.registers().set(WishboneBus::kAck, region_bit(Region::Sram));
    auto r = bus.tick(&req, mem, 10);
    ASSERT_TRUE(r);
    EXPECT_EQ(r->data, 0x1111'1111u);
}

TEST(WishboneProperty, FaultFreeReadsMatchOracle) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 500; ++i) {
        MemoryMap mem = random_memory(rng);
        const auto& info = kRegions[rng() % kRegionCount];
        const std::uint32_t addr = info.base + static_cast<std::uint32_t>(rng() % info.size) / 4 * 4;
        WishboneBus bus;
        auto c = run_one(bus, mem, load(addr));
        ASSERT_TRUE(c);
        ASSERT_EQ(c->resp.status, BusStatus::Ok);
        ASSERT_EQ(c->resp.data, mem.slave_word(info.region, addr));
        ASSERT_EQ(popcount32(c->resp.select), 1u);
        ASSERT_EQ(c->resp.select, region_bit(info.region));
    }
}

TEST(WishboneProperty, MultiHotEqualsOrOfSelectedSlaves) {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 300; ++i) {
        MemoryMap mem = random_memory(rng);
        std::uint32_t mask;
        do mask = static_cast<std::uint32_t>(rng()) & 0xFu;
        while (popcount32(mask) < 2);
        const std::uint32_t addr = 0x1000'0000u + static_cast<std::uint32_t>(rng() % 0x2000) / 4 * 4;
        std::uint32_t expect = 0;
        for (std::size_t r = 0; r < kRegionCount; ++r)
            if (mask & (1u << r)) expect |= mem.slave_word(static_cast<Region>(r), addr);
        WishboneBus bus;
        auto got = forced_select_load(bus, mem, addr, mask);
        ASSERT_TRUE(got);
        ASSERT_EQ(got->data, expect);
    }
}
