#ifndef BUSFI_ASSEMBLER_HPP
#define BUSFI_ASSEMBLER_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "busfi/isa.hpp"
#include "busfi/memory_map.hpp"

namespace busfi {

struct Program {
    std::uint32_t rom_base = 0;
    std::vector<std::uint32_t> rom_image;
    std::uint32_t data_base = 0;
    std::vector<std::uint8_t> data_image;
    std::map<std::string, std::uint32_t> symbols;

    std::uint32_t symbol(std::string_view name) const {
        auto it = symbols.find(std::string(name));
        if (it == symbols.end()) throw std::out_of_range("undefined symbol '" + std::string(name) + "'");
        return it->second;
    }

    bool operator==(const Program&) const = default;
};

class AsmError : public std::runtime_error {
public:
    AsmError(int line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

struct AsmLayout {
    std::uint32_t rom_base = region_info(Region::Rom).base;
    std::uint32_t rom_size = region_info(Region::Rom).size;
    std::uint32_t data_base = region_info(Region::Sram).base;
    std::uint32_t data_size = region_info(Region::Sram).size;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

inline std::vector<std::string_view> split_operands(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '(') ++depth;
        if (s[i] == ')') --depth;
        if (s[i] == ',' && depth == 0) {
            out.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    out.push_back(trim(s.substr(start)));
    return out;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_' || s[0] == '.')) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
}

inline std::optional<std::int64_t> parse_number(std::string_view s) {
    s = trim(s);
    bool neg = false;
    if (!s.empty() && (s[0] == '-' || s[0] == '+')) {
        neg = s[0] == '-';
        s.remove_prefix(1);
    }
    int base = 10;
    if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) base = 16, s.remove_prefix(2);
    else if (s.size() > 2 && s[0] == '0' && (s[1] == 'b' || s[1] == 'B')) base = 2, s.remove_prefix(2);
    if (s.empty()) return std::nullopt;
    std::string digits;
    for (char c : s) {
        if (c != '_') digits.push_back(c);
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, base);
    if (ec != std::errc{} || p != digits.data() + digits.size()) return std::nullopt;
    return neg ? -static_cast<std::int64_t>(v) : static_cast<std::int64_t>(v);
}

inline std::optional<unsigned> parse_register(std::string_view s) {
    static const std::map<std::string, unsigned> abi{
        {"zero", 0}, {"ra", 1}, {"sp", 2},  {"gp", 3},  {"tp", 4},  {"t0", 5},  {"t1", 6},  {"t2", 7},
        {"s0", 8},   {"fp", 8}, {"s1", 9},  {"a0", 10}, {"a1", 11}, {"a2", 12}, {"a3", 13}, {"a4", 14},
        {"a5", 15},  {"a6", 16}, {"a7", 17}, {"s2", 18}, {"s3", 19}, {"s4", 20}, {"s5", 21}, {"s6", 22},
        {"s7", 23},  {"s8", 24}, {"s9", 25}, {"s10", 26}, {"s11", 27}, {"t3", 28}, {"t4", 29}, {"t5", 30},
        {"t6", 31},
    };
    std::string lower(trim(s));
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (auto it = abi.find(lower); it != abi.end()) return it->second;
    if (lower.size() >= 2 && lower[0] == 'x') {
        auto n = parse_number(std::string_view(lower).substr(1));
        if (n && *n >= 0 && *n < 32) return static_cast<unsigned>(*n);
    }
    return std::nullopt;
}

struct SourceLine {
    int number;
    std::vector<std::string> labels;
    std::string head;  // mnemonic or directive, upper-cased
    std::string operands;
};

}  // namespace detail

/// Two-pass assembler for the line-oriented dialect:
///   label:  MNEMONIC op, op, op   # comment
///   .org ADDR | .word V | .byte V[,V...] | .sym NAME
/// Immediates accept numbers, symbols, %hi(sym) and %lo(sym). Branch and JAL
/// targets given as symbols are turned into pc-relative byte offsets.
class Assembler {
public:
    explicit Assembler(AsmLayout layout = {}) : layout_(layout) {}

    Program assemble(std::string_view source) const {
        const auto lines = tokenize(source);
        std::map<std::string, std::uint32_t> symbols;

        // Pass 1: addresses.
        std::uint32_t lc = layout_.rom_base;
        for (const auto& line : lines) {
            for (const auto& label : line.labels) define(symbols, label, lc, line.number);
            if (line.head.empty()) continue;
            if (line.head == ".ORG") {
                lc = static_cast<std::uint32_t>(require_number(line.operands, line.number));
            } else if (line.head == ".SYM") {
                auto name = detail::trim(line.operands);
                if (!detail::is_identifier(name)) throw AsmError(line.number, "bad symbol name");
                define(symbols, std::string(name), lc, line.number);
            } else if (line.head == ".WORD") {
                lc += 4 * static_cast<std::uint32_t>(detail::split_operands(line.operands).size());
            } else if (line.head == ".BYTE") {
                lc += static_cast<std::uint32_t>(detail::split_operands(line.operands).size());
            } else {
                lc += 4;
            }
        }

        // Pass 2: bytes.
        std::map<std::uint32_t, std::uint8_t> bytes;
        auto emit = [&](std::uint32_t addr, std::uint8_t b, int ln) {
            if (!bytes.emplace(addr, b).second) throw AsmError(ln, "overlapping output at address " + hex(addr));
        };
        lc = layout_.rom_base;
        for (const auto& line : lines) {
            if (line.head.empty() || line.head == ".SYM") continue;
            if (line.head == ".ORG") {
                lc = static_cast<std::uint32_t>(require_number(line.operands, line.number));
                continue;
            }
            if (line.head == ".WORD" || line.head == ".BYTE") {
                const bool word = line.head == ".WORD";
                for (auto op : detail::split_operands(line.operands)) {
                    auto v = value(op, symbols, line.number);
                    if (word ? (v < -(std::int64_t{1} << 31) || v > 0xFFFF'FFFFll) : (v < -128 || v > 255))
                        throw AsmError(line.number, "value out of range: " + std::string(op));
                    check_placement(lc, word ? 4 : 1, false, line.number);
                    for (unsigned i = 0; i < (word ? 4u : 1u); ++i)
                        emit(lc + i, static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)), line.number);
                    lc += word ? 4 : 1;
                }
                continue;
            }
            check_placement(lc, 4, true, line.number);
            const std::uint32_t word = encode(parse_instruction(line, lc, symbols));
            for (unsigned i = 0; i < 4; ++i) emit(lc + i, static_cast<std::uint8_t>(word >> (8 * i)), line.number);
            lc += 4;
        }

        Program prog;
        prog.rom_base = layout_.rom_base;
        prog.data_base = layout_.data_base;
        prog.symbols = std::move(symbols);
        for (const auto& [addr, b] : bytes) {
            if (in_rom(addr)) {
                const std::uint32_t idx = (addr - layout_.rom_base) / 4;
                if (prog.rom_image.size() <= idx) prog.rom_image.resize(idx + 1, 0);
                prog.rom_image[idx] |= static_cast<std::uint32_t>(b) << (8 * ((addr - layout_.rom_base) % 4));
            } else {
                const std::uint32_t off = addr - layout_.data_base;
                if (prog.data_image.size() <= off) prog.data_image.resize(off + 1, 0);
                prog.data_image[off] = b;
            }
        }
        return prog;
    }

private:
    static std::string hex(std::uint32_t v) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "0x%08X", v);
        return buf;
    }

    bool in_rom(std::uint32_t a) const { return a >= layout_.rom_base && a - layout_.rom_base < layout_.rom_size; }
    bool in_data(std::uint32_t a) const { return a >= layout_.data_base && a - layout_.data_base < layout_.data_size; }

    void check_placement(std::uint32_t addr, std::uint32_t len, bool code, int ln) const {
        const std::uint32_t last = addr + len - 1;
        if (code) {
            if (!in_rom(addr) || !in_rom(last)) throw AsmError(ln, "instruction outside ROM at " + hex(addr));
            if (addr & 3u) throw AsmError(ln, "misaligned instruction at " + hex(addr));
            return;
        }
        const bool rom = in_rom(addr) && in_rom(last);
        const bool data = in_data(addr) && in_data(last);
        if (!rom && !data) throw AsmError(ln, "data outside ROM/SRAM at " + hex(addr));
    }

    static void define(std::map<std::string, std::uint32_t>& symbols, const std::string& name, std::uint32_t addr,
                       int ln) {
        if (!symbols.emplace(name, addr).second) throw AsmError(ln, "duplicate label '" + name + "'");
    }

    static std::int64_t require_number(std::string_view s, int ln) {
        auto n = detail::parse_number(s);
        if (!n) throw AsmError(ln, "expected a number, got '" + std::string(detail::trim(s)) + "'");
        return *n;
    }

    static std::vector<detail::SourceLine> tokenize(std::string_view source) {
        std::vector<detail::SourceLine> out;
        int number = 0;
        std::size_t pos = 0;
        while (pos <= source.size()) {
            auto eol = source.find('\n', pos);
            if (eol == std::string_view::npos) eol = source.size();
            std::string_view raw = source.substr(pos, eol - pos);
            pos = eol + 1;
            ++number;
            if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
            raw = detail::trim(raw);
            detail::SourceLine line{number, {}, {}, {}};
            for (;;) {
                auto colon = raw.find(':');
                if (colon == std::string_view::npos) break;
                auto label = detail::trim(raw.substr(0, colon));
                if (!detail::is_identifier(label)) break;
                line.labels.emplace_back(label);
                raw = detail::trim(raw.substr(colon + 1));
            }
            if (!raw.empty()) {
                auto sp = raw.find_first_of(" \t");
                line.head = detail::upper(raw.substr(0, sp));
                if (sp != std::string_view::npos) line.operands = std::string(detail::trim(raw.substr(sp)));
            }
            if (!line.labels.empty() || !line.head.empty()) out.push_back(std::move(line));
            if (eol == source.size()) break;
        }
        return out;
    }

    static std::int64_t value(std::string_view expr, const std::map<std::string, std::uint32_t>& symbols, int ln) {
        expr = detail::trim(expr);
        auto relocation = [&](std::string_view prefix) -> std::optional<std::int64_t> {
            if (expr.size() <= prefix.size() + 1 || expr.substr(0, prefix.size()) != prefix || expr.back() != ')')
                return std::nullopt;
            return value(expr.substr(prefix.size(), expr.size() - prefix.size() - 1), symbols, ln);
        };
        if (auto v = relocation("%hi(")) return ((*v + 0x800) >> 12) & 0xFFFFF;
        if (auto v = relocation("%lo(")) return sign_extend(static_cast<std::uint32_t>(*v) & 0xFFFu, 12);
        if (auto n = detail::parse_number(expr)) return *n;
        if (detail::is_identifier(expr)) {
            auto it = symbols.find(std::string(expr));
            if (it == symbols.end()) throw AsmError(ln, "undefined label '" + std::string(expr) + "'");
            return it->second;
        }
        throw AsmError(ln, "bad expression '" + std::string(expr) + "'");
    }

    static unsigned reg(std::string_view s, int ln) {
        auto r = detail::parse_register(s);
        if (!r) throw AsmError(ln, "bad register '" + std::string(detail::trim(s)) + "'");
        return *r;
    }

    /// "imm(reg)" memory operand.
    static std::pair<std::int64_t, unsigned> mem_operand(std::string_view s,
                                                         const std::map<std::string, std::uint32_t>& symbols, int ln) {
        s = detail::trim(s);
        if (s.empty() || s.back() != ')') throw AsmError(ln, "expected imm(reg), got '" + std::string(s) + "'");
        auto open = s.rfind('(');
        if (open == std::string_view::npos) throw AsmError(ln, "expected imm(reg)");
        auto imm_text = detail::trim(s.substr(0, open));
        std::int64_t imm = imm_text.empty() ? 0 : value(imm_text, symbols, ln);
        return {imm, reg(s.substr(open + 1, s.size() - open - 2), ln)};
    }

    static Instruction parse_instruction(const detail::SourceLine& line, std::uint32_t pc,
                                         const std::map<std::string, std::uint32_t>& symbols) {
        const int ln = line.number;
        auto it = std::find(kMnemonics.begin(), kMnemonics.end(), line.head);
        if (it == kMnemonics.end()) throw AsmError(ln, "unknown mnemonic '" + line.head + "'");
        Instruction in;
        in.op = static_cast<Opcode>(it - kMnemonics.begin());
        const auto ops = detail::split_operands(line.operands);
        auto expect = [&](std::size_t n) {
            if (ops.size() != n)
                throw AsmError(ln, line.head + " expects " + std::to_string(n) + " operands, got " +
                                       std::to_string(ops.size()));
        };
        // Branch/jump targets: a symbol means "that address", a number is a raw offset.
        auto target = [&](std::string_view s) -> std::int64_t {
            s = detail::trim(s);
            if (detail::is_identifier(s)) return value(s, symbols, ln) - static_cast<std::int64_t>(pc);
            return value(s, symbols, ln);
        };
        std::int64_t imm = 0;
        switch (format_of(in.op)) {
            case Format::R:
                expect(3);
                in.rd = static_cast<std::uint8_t>(reg(ops[0], ln));
                in.rs1 = static_cast<std::uint8_t>(reg(ops[1], ln));
                in.rs2 = static_cast<std::uint8_t>(reg(ops[2], ln));
                break;
            case Format::I:
                in.rd = static_cast<std::uint8_t>(reg(ops.empty() ? "" : ops[0], ln));
                if (in.op == Opcode::LW || in.op == Opcode::LBU || (in.op == Opcode::JALR && ops.size() == 2)) {
                    expect(2);
                    auto [v, base] = mem_operand(ops[1], symbols, ln);
                    imm = v;
                    in.rs1 = static_cast<std::uint8_t>(base);
                } else {
                    expect(3);
                    in.rs1 = static_cast<std::uint8_t>(reg(ops[1], ln));
                    imm = value(ops[2], symbols, ln);
                }
                break;
            case Format::S: {
                expect(2);
                in.rs2 = static_cast<std::uint8_t>(reg(ops[0], ln));
                auto [v, base] = mem_operand(ops[1], symbols, ln);
                imm = v;
                in.rs1 = static_cast<std::uint8_t>(base);
                break;
            }
            case Format::B:
                expect(3);
                in.rs1 = static_cast<std::uint8_t>(reg(ops[0], ln));
                in.rs2 = static_cast<std::uint8_t>(reg(ops[1], ln));
                imm = target(ops[2]);
                break;
            case Format::U:
                expect(2);
                in.rd = static_cast<std::uint8_t>(reg(ops[0], ln));
                imm = value(ops[1], symbols, ln);
                break;
            case Format::J:
                expect(2);
                in.rd = static_cast<std::uint8_t>(reg(ops[0], ln));
                imm = target(ops[1]);
                break;
            case Format::None:
                expect(0);
                break;
        }
        if (!immediate_fits(in.op, imm))
            throw AsmError(ln, "immediate " + std::to_string(imm) + " out of range for " + line.head);
        in.imm = static_cast<std::int32_t>(imm);
        return in;
    }

    AsmLayout layout_;
};

inline Program assemble(std::string_view source, AsmLayout layout = {}) { return Assembler(layout).assemble(source); }

}  // namespace busfi

#endif
