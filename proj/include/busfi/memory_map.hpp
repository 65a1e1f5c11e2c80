#ifndef BUSFI_MEMORY_MAP_HPP
#define BUSFI_MEMORY_MAP_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace busfi {

// Slave order matches the bit order of every select register in the models.
enum class Region : std::uint8_t { Rom = 0, Sram = 1, MainRam = 2, Csr = 3 };

inline constexpr std::size_t kRegionCount = 4;

struct RegionInfo {
    Region region;
    std::string_view name;
    std::uint32_t base;
    std::uint32_t size;
    bool writable;
};

inline constexpr std::array<RegionInfo, kRegionCount> kRegions{{
    {Region::Rom, "ROM", 0x0000'0000u, 8 * 1024, false},
    {Region::Sram, "SRAM", 0x1000'0000u, 8 * 1024, true},
    {Region::MainRam, "MAIN_RAM", 0x4000'0000u, 8 * 1024, true},
    {Region::Csr, "CSR", 0xF000'0000u, 4 * 1024, true},
}};

constexpr const RegionInfo& region_info(Region r) { return kRegions[static_cast<std::size_t>(r)]; }

constexpr std::string_view region_name(Region r) { return region_info(r).name; }

/// Address decoder shared by every interconnect; nullopt for gaps.
constexpr std::optional<Region> decode_address(std::uint32_t address) {
    for (const auto& info : kRegions) {
        if (address >= info.base && address - info.base < info.size) return info.region;
    }
    return std::nullopt;
}

constexpr std::uint32_t region_bit(Region r) { return 1u << static_cast<unsigned>(r); }

/// One-hot slave select for an address; 0 when unmapped.
constexpr std::uint32_t select_for(std::uint32_t address) {
    auto r = decode_address(address);
    return r ? region_bit(*r) : 0u;
}

/// Byte stores for the four slaves. Slaves only see the low address bits,
/// so any address is served modulo the slave size.
class MemoryMap {
public:
    MemoryMap() {
        for (std::size_t i = 0; i < kRegionCount; ++i) bytes_[i].assign(kRegions[i].size, 0);
    }

    std::uint32_t slave_word(Region r, std::uint32_t address) const {
        const auto& mem = bytes_[static_cast<std::size_t>(r)];
        std::uint32_t off = (address % static_cast<std::uint32_t>(mem.size())) & ~3u;
        return static_cast<std::uint32_t>(mem[off]) | (static_cast<std::uint32_t>(mem[off + 1]) << 8) |
               (static_cast<std::uint32_t>(mem[off + 2]) << 16) | (static_cast<std::uint32_t>(mem[off + 3]) << 24);
    }

    /// Writes to a read-only slave are dropped.
    void slave_write(Region r, std::uint32_t address, std::uint32_t data, std::uint8_t lanes) {
        if (!region_info(r).writable) return;
        auto& mem = bytes_[static_cast<std::size_t>(r)];
        std::uint32_t off = (address % static_cast<std::uint32_t>(mem.size())) & ~3u;
        for (unsigned lane = 0; lane < 4; ++lane) {
            if (lanes & (1u << lane)) mem[off + lane] = static_cast<std::uint8_t>(data >> (8 * lane));
        }
    }

    /// Debug port: direct peek bypassing the bus.
    std::optional<std::uint8_t> peek_byte(std::uint32_t address) const {
        auto r = decode_address(address);
        if (!r) return std::nullopt;
        return bytes_[static_cast<std::size_t>(*r)][address - region_info(*r).base];
    }

    std::optional<std::uint32_t> peek_word(std::uint32_t address) const {
        auto r = decode_address(address);
        if (!r || (address & 3u) != 0) return std::nullopt;
        return slave_word(*r, address);
    }

    void load(Region r, std::uint32_t offset, std::span<const std::uint8_t> image) {
        auto& mem = bytes_[static_cast<std::size_t>(r)];
        if (offset > mem.size() || image.size() > mem.size() - offset)
            throw std::length_error("image overflows region " + std::string(region_name(r)));
        std::copy(image.begin(), image.end(), mem.begin() + offset);
    }

    std::span<const std::uint8_t> region_bytes(Region r) const { return bytes_[static_cast<std::size_t>(r)]; }

    /// Everything the program can modify: SRAM, MAIN_RAM and the CSR backing store.
    bool writable_equal(const MemoryMap& other) const {
        for (std::size_t i = 0; i < kRegionCount; ++i) {
            if (kRegions[i].writable && bytes_[i] != other.bytes_[i]) return false;
        }
        return true;
    }

    bool operator==(const MemoryMap&) const = default;

private:
    std::array<std::vector<std::uint8_t>, kRegionCount> bytes_;
};

}  // namespace busfi

#endif
