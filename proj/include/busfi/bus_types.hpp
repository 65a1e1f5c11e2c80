#ifndef BUSFI_BUS_TYPES_HPP
#define BUSFI_BUS_TYPES_HPP

#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace busfi {

enum class BusKind : std::uint8_t { Wishbone, AxiLite, Axi };

inline constexpr BusKind kAllBuses[] = {BusKind::Wishbone, BusKind::AxiLite, BusKind::Axi};

/// Short code used in fault-spec lines and result files.
constexpr std::string_view bus_code(BusKind k) {
    switch (k) {
        case BusKind::Wishbone: return "WB";
        case BusKind::AxiLite: return "AXIL";
        case BusKind::Axi: return "AXI";
    }
    return "?";
}

constexpr std::string_view bus_name(BusKind k) {
    switch (k) {
        case BusKind::Wishbone: return "wishbone";
        case BusKind::AxiLite: return "axilite";
        case BusKind::Axi: return "axi";
    }
    return "?";
}

/// Accepts either the long name or the short code, case-insensitively.
inline std::optional<BusKind> parse_bus_kind(std::string_view text) {
    std::string s(text);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "wishbone" || s == "wb") return BusKind::Wishbone;
    if (s == "axilite" || s == "axil" || s == "axi-lite" || s == "axi_lite") return BusKind::AxiLite;
    if (s == "axi") return BusKind::Axi;
    return std::nullopt;
}

enum class AccessKind : std::uint8_t { Fetch, LoadWord, LoadByte, StoreWord, StoreByte };

constexpr bool is_read(AccessKind k) {
    return k == AccessKind::Fetch || k == AccessKind::LoadWord || k == AccessKind::LoadByte;
}

struct MemRequest {
    AccessKind kind = AccessKind::Fetch;
    std::uint32_t address = 0;
    std::uint32_t store_data = 0;  // already shifted onto its byte lanes
    std::uint8_t byte_lanes = 0xF;
    std::uint64_t seq = 0;         // identifies one CPU request across cycles
};

enum class BusStatus : std::uint8_t { Ok, SlvErr, DecErr, WbErr };

constexpr std::string_view status_name(BusStatus s) {
    switch (s) {
        case BusStatus::Ok: return "OK";
        case BusStatus::SlvErr: return "SLVERR";
        case BusStatus::DecErr: return "DECERR";
        case BusStatus::WbErr: return "WB_ERR";
    }
    return "?";
}

inline std::optional<BusStatus> parse_status(std::string_view s) {
    if (s == "OK") return BusStatus::Ok;
    if (s == "SLVERR") return BusStatus::SlvErr;
    if (s == "DECERR") return BusStatus::DecErr;
    if (s == "WB_ERR") return BusStatus::WbErr;
    return std::nullopt;
}

/// What the interconnect hands back to the CPU when a transaction completes.
struct BusResponse {
    std::uint32_t data = 0;
    BusStatus status = BusStatus::Ok;
    std::uint32_t select = 0;  // slave-select bits that served the transfer
    std::uint64_t completion_cycle = 0;
};

/// Data constant each protocol forces onto the bus on its error/reset path.
constexpr std::uint32_t reset_constant(BusKind k) {
    return k == BusKind::Wishbone ? 0xFFFF'FFFFu : 0x0000'0000u;
}

}  // namespace busfi

#endif
