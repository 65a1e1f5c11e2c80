#ifndef BUSFI_ISA_HPP
#define BUSFI_ISA_HPP

#include <array>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string_view>

#include "busfi/bus_types.hpp"

namespace busfi {

// Opcode 0 is ADDI so the all-zero word is ADDI x0, x0, 0: a no-effect instruction.
enum class Opcode : std::uint8_t {
    ADDI = 0, LUI, ANDI, ORI, ADD, SUB, AND, OR, XOR, LW, LBU, SW, SB, BEQ, BNE, BLT, BGE, JAL, JALR, ECALL_HALT,
};

inline constexpr std::size_t kOpcodeCount = 20;

inline constexpr std::array<std::string_view, kOpcodeCount> kMnemonics{
    "ADDI", "LUI", "ANDI", "ORI", "ADD", "SUB", "AND", "OR", "XOR", "LW",
    "LBU", "SW", "SB", "BEQ", "BNE", "BLT", "BGE", "JAL", "JALR", "ECALL_HALT",
};

constexpr std::string_view mnemonic(Opcode op) { return kMnemonics[static_cast<std::size_t>(op)]; }

enum class Format : std::uint8_t { R, I, S, B, U, J, None };

constexpr Format format_of(Opcode op) {
    switch (op) {
        case Opcode::ADD: case Opcode::SUB: case Opcode::AND: case Opcode::OR: case Opcode::XOR:
            return Format::R;
        case Opcode::ADDI: case Opcode::ANDI: case Opcode::ORI: case Opcode::LW: case Opcode::LBU:
        case Opcode::JALR:
            return Format::I;
        case Opcode::SW: case Opcode::SB:
            return Format::S;
        case Opcode::BEQ: case Opcode::BNE: case Opcode::BLT: case Opcode::BGE:
            return Format::B;
        case Opcode::LUI:
            return Format::U;
        case Opcode::JAL:
            return Format::J;
        case Opcode::ECALL_HALT:
            return Format::None;
    }
    return Format::None;
}

/// Word layout (bit ranges inclusive):
///   op[4:0] rd[9:5] rs1[14:10] rs2[19:15] imm12[31:20]   R/I/S/B
///   op[4:0] rd[9:5] 0[11:10] imm20[31:12]                 U/J
/// Fields a format does not use must be zero or the word is illegal.
struct Instruction {
    Opcode op = Opcode::ADDI;
    std::uint8_t rd = 0;
    std::uint8_t rs1 = 0;
    std::uint8_t rs2 = 0;
    std::int32_t imm = 0;

    bool operator==(const Instruction&) const = default;
};

constexpr bool fits_signed(std::int64_t v, unsigned bits) {
    return v >= -(std::int64_t{1} << (bits - 1)) && v < (std::int64_t{1} << (bits - 1));
}

constexpr std::int32_t sign_extend(std::uint32_t v, unsigned bits) {
    const std::uint32_t m = 1u << (bits - 1);
    return static_cast<std::int32_t>((v ^ m) - m);
}

/// Immediate range per format: 12-bit signed for R/I/S/B, 20-bit unsigned
/// for LUI, 20-bit signed byte offset for JAL.
constexpr bool immediate_fits(Opcode op, std::int64_t imm) {
    switch (format_of(op)) {
        case Format::I: case Format::S: case Format::B: return fits_signed(imm, 12);
        case Format::U: return imm >= 0 && imm <= 0xFFFFF;
        case Format::J: return fits_signed(imm, 20);
        case Format::R: case Format::None: return imm == 0;
    }
    return false;
}

constexpr std::uint32_t encode(const Instruction& in) {
    const auto op = static_cast<std::uint32_t>(in.op);
    const std::uint32_t rd = in.rd & 31u, rs1 = in.rs1 & 31u, rs2 = in.rs2 & 31u;
    const auto imm = static_cast<std::uint32_t>(in.imm);
    switch (format_of(in.op)) {
        case Format::R: return op | (rd << 5) | (rs1 << 10) | (rs2 << 15);
        case Format::I: return op | (rd << 5) | (rs1 << 10) | ((imm & 0xFFFu) << 20);
        case Format::S:
        case Format::B: return op | (rs1 << 10) | (rs2 << 15) | ((imm & 0xFFFu) << 20);
        case Format::U:
        case Format::J: return op | (rd << 5) | ((imm & 0xFFFFFu) << 12);
        case Format::None: return op;
    }
    return op;
}

constexpr std::optional<Instruction> decode(std::uint32_t word) {
    const std::uint32_t op = word & 31u;
    if (op >= kOpcodeCount) return std::nullopt;
    Instruction in;
    in.op = static_cast<Opcode>(op);
    const auto rd = static_cast<std::uint8_t>((word >> 5) & 31u);
    const auto rs1 = static_cast<std::uint8_t>((word >> 10) & 31u);
    const auto rs2 = static_cast<std::uint8_t>((word >> 15) & 31u);
    const std::uint32_t imm12 = word >> 20;
    switch (format_of(in.op)) {
        case Format::R:
            if (imm12 != 0) return std::nullopt;
            in.rd = rd, in.rs1 = rs1, in.rs2 = rs2;
            break;
        case Format::I:
            if (rs2 != 0) return std::nullopt;
            in.rd = rd, in.rs1 = rs1, in.imm = sign_extend(imm12, 12);
            break;
        case Format::S:
        case Format::B:
            if (rd != 0) return std::nullopt;
            in.rs1 = rs1, in.rs2 = rs2, in.imm = sign_extend(imm12, 12);
            break;
        case Format::U:
        case Format::J:
            if (((word >> 10) & 3u) != 0) return std::nullopt;
            in.rd = rd;
            in.imm = format_of(in.op) == Format::U ? static_cast<std::int32_t>(word >> 12) : sign_extend(word >> 12, 20);
            break;
        case Format::None:
            if ((word >> 5) != 0) return std::nullopt;
            break;
    }
    return in;
}

enum class TrapCause : std::uint8_t { IllegalInstruction, MisalignedAccess, BusError };

constexpr std::string_view trap_name(TrapCause t) {
    switch (t) {
        case TrapCause::IllegalInstruction: return "illegal_instruction";
        case TrapCause::MisalignedAccess: return "misaligned_access";
        case TrapCause::BusError: return "bus_error";
    }
    return "?";
}

struct CpuState {
    std::uint32_t pc = 0;
    std::array<std::uint32_t, 32> regs{};
    bool halted = false;
    std::optional<TrapCause> trap;

    std::uint32_t reg(unsigned i) const { return i == 0 ? 0u : regs[i]; }
    void set_reg(unsigned i, std::uint32_t v) {
        if (i != 0) regs[i] = v;
    }

    bool operator==(const CpuState&) const = default;
};

enum class CpuEvent : std::uint8_t { Executed, Halted, Trapped, Stalled };

struct MemResponse {
    std::uint32_t data = 0;
    BusStatus status = BusStatus::Ok;
    std::uint32_t cycles_waited = 0;

    bool ok() const { return status == BusStatus::Ok; }
};

/// A bus-master port: `transact` blocks (in simulated cycles) until the
/// interconnect answers and returns nullopt if the cycle budget ran out;
/// `idle` spends one cycle without a request and returns false likewise.
template <class P>
concept BusMasterPort = requires(P& p, const MemRequest& r) {
    { p.transact(r) } -> std::same_as<std::optional<MemResponse>>;
    { p.idle() } -> std::same_as<bool>;
};

/// Fetch, one execute cycle, then the optional data transaction.
///
/// Bus errors: an AXI error response on a fetch traps, any error on a store
/// traps, and a load consumes whatever data the interconnect delivered.
template <BusMasterPort Port>
CpuEvent step(CpuState& cpu, Port& port) {
    if (cpu.halted || cpu.trap) return cpu.halted ? CpuEvent::Halted : CpuEvent::Trapped;

    auto trap = [&](TrapCause cause) {
        cpu.trap = cause;
        return CpuEvent::Trapped;
    };

    if (cpu.pc & 3u) return trap(TrapCause::MisalignedAccess);
    auto fetched = port.transact(MemRequest{AccessKind::Fetch, cpu.pc, 0, 0xF, 0});
    if (!fetched) return CpuEvent::Stalled;
    // Wishbone's timeout path still acknowledges, so its forced data gets decoded.
    if (!fetched->ok() && fetched->status != BusStatus::WbErr) return trap(TrapCause::BusError);
    auto decoded = decode(fetched->data);
    if (!decoded) return trap(TrapCause::IllegalInstruction);
    if (!port.idle()) return CpuEvent::Stalled;

    const Instruction& in = *decoded;
    const std::uint32_t a = cpu.reg(in.rs1);
    const std::uint32_t b = cpu.reg(in.rs2);
    const auto uimm = static_cast<std::uint32_t>(in.imm);
    std::uint32_t next_pc = cpu.pc + 4;

    switch (in.op) {
        case Opcode::ADDI: cpu.set_reg(in.rd, a + uimm); break;
        case Opcode::ANDI: cpu.set_reg(in.rd, a & uimm); break;
        case Opcode::ORI: cpu.set_reg(in.rd, a | uimm); break;
        case Opcode::LUI: cpu.set_reg(in.rd, uimm << 12); break;
        case Opcode::ADD: cpu.set_reg(in.rd, a + b); break;
        case Opcode::SUB: cpu.set_reg(in.rd, a - b); break;
        case Opcode::AND: cpu.set_reg(in.rd, a & b); break;
        case Opcode::OR: cpu.set_reg(in.rd, a | b); break;
        case Opcode::XOR: cpu.set_reg(in.rd, a ^ b); break;
        case Opcode::LW:
        case Opcode::LBU: {
            const std::uint32_t addr = a + uimm;
            const bool word = in.op == Opcode::LW;
            if (word && (addr & 3u)) return trap(TrapCause::MisalignedAccess);
            auto r = port.transact(MemRequest{word ? AccessKind::LoadWord : AccessKind::LoadByte, addr, 0,
                                              static_cast<std::uint8_t>(word ? 0xF : 1u << (addr & 3u)), 0});
            if (!r) return CpuEvent::Stalled;
            cpu.set_reg(in.rd, word ? r->data : (r->data >> (8 * (addr & 3u))) & 0xFFu);
            break;
        }
        case Opcode::SW:
        case Opcode::SB: {
            const std::uint32_t addr = a + uimm;
            const bool word = in.op == Opcode::SW;
            if (word && (addr & 3u)) return trap(TrapCause::MisalignedAccess);
            const unsigned lane = addr & 3u;
            MemRequest req{word ? AccessKind::StoreWord : AccessKind::StoreByte, addr,
                           word ? b : ((b & 0xFFu) << (8 * lane)),
                           static_cast<std::uint8_t>(word ? 0xF : 1u << lane), 0};
            auto r = port.transact(req);
            if (!r) return CpuEvent::Stalled;
            if (!r->ok()) return trap(TrapCause::BusError);
            break;
        }
        case Opcode::BEQ: if (a == b) next_pc = cpu.pc + uimm; break;
        case Opcode::BNE: if (a != b) next_pc = cpu.pc + uimm; break;
        case Opcode::BLT: if (static_cast<std::int32_t>(a) < static_cast<std::int32_t>(b)) next_pc = cpu.pc + uimm; break;
        case Opcode::BGE: if (static_cast<std::int32_t>(a) >= static_cast<std::int32_t>(b)) next_pc = cpu.pc + uimm; break;
        case Opcode::JAL:
            cpu.set_reg(in.rd, cpu.pc + 4);
            next_pc = cpu.pc + uimm;
            break;
        case Opcode::JALR:
            next_pc = (a + uimm) & ~1u;
            cpu.set_reg(in.rd, cpu.pc + 4);
            break;
        case Opcode::ECALL_HALT:
            cpu.halted = true;
            return CpuEvent::Halted;
    }
    cpu.pc = next_pc;
    return CpuEvent::Executed;
}

}  // namespace busfi

#endif
