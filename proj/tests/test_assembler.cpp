#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "busfi/benchmark.hpp"

using namespace busfi;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::uint8_t data_byte(const Program& p, std::uint32_t addr) { return p.data_image.at(addr - p.data_base); }

int error_line(std::string_view src) {
    try {
        assemble(src);
    } catch (const AsmError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST(Assembler, SingleInstructionAtAddressZero) {
    const auto p = assemble("ADDI x1, x0, 0\n");
    ASSERT_EQ(p.rom_image.size(), 1u);
    EXPECT_EQ(p.rom_base, 0u);
    EXPECT_EQ(p.rom_image[0], encode(Instruction{Opcode::ADDI, 1, 0, 0, 0}));
}

TEST(Assembler, VerifyPinSymbolsAndPins) {
    const Program& p = verifypin();
    const auto user = p.symbol("g_userPin");
    const auto card = p.symbol("g_cardPin");
    for (unsigned i = 0; i < 4; ++i) EXPECT_EQ(data_byte(p, user + i), 0);
    const std::uint8_t expect[] = {4, 3, 2, 1};
    for (unsigned i = 0; i < 4; ++i) EXPECT_EQ(data_byte(p, card + i), expect[i]);
    EXPECT_EQ(data_byte(p, p.symbol("g_ptc")), 3);
    EXPECT_EQ(p.symbol("g_authenticated") % 4, 0u);
    EXPECT_NO_THROW(p.symbol("verifyPIN"));
    EXPECT_NO_THROW(p.symbol("byteArrayCompare"));
}

TEST(Assembler, EmbeddedSourceMatchesCheckedInProgram) {
    const auto on_disk = read_file(std::string(BUSFI_SOURCE_DIR) + "/programs/verifypin.asm");
    ASSERT_FALSE(on_disk.empty());
    EXPECT_EQ(std::string(kVerifyPinSource.substr(1)), on_disk);
}

TEST(Assembler, LabelsBranchesAndHiLo) {
    const auto p = assemble(R"(
start:  LUI  x5, %hi(target)
        ADDI x5, x5, %lo(target)
loop:   BNE  x5, x0, loop
        JAL  x1, start
        .org 0x10000800
target: .word 0x12345678
)");
    ASSERT_EQ(p.rom_image.size(), 4u);
    const auto hi = decode(p.rom_image[0]);
    const auto lo = decode(p.rom_image[1]);
    ASSERT_TRUE(hi && lo);
    EXPECT_EQ((static_cast<std::uint32_t>(hi->imm) << 12) + static_cast<std::uint32_t>(lo->imm), 0x10000800u);
    EXPECT_EQ(decode(p.rom_image[2])->imm, 0);
    EXPECT_EQ(decode(p.rom_image[3])->imm, -12);
    EXPECT_EQ(p.symbol("target"), 0x10000800u);
}

TEST(Assembler, HiLoCarryForNegativeLow) {
    // Low half >= 0x800 sign-extends negative, so %hi must round up.
    const auto p = assemble("LUI x5, %hi(0x10000FFC)\nADDI x5, x5, %lo(0x10000FFC)\n");
    const auto hi = decode(p.rom_image[0]);
    const auto lo = decode(p.rom_image[1]);
    EXPECT_EQ(hi->imm, 0x10001);
    EXPECT_EQ(lo->imm, -4);
}

TEST(Assembler, SymDirectiveAndAbiNames) {
    const auto p = assemble(".sym entry\nADD a0, s1, t2\n");
    EXPECT_EQ(p.symbol("entry"), 0u);
    const auto d = decode(p.rom_image[0]);
    EXPECT_EQ(d->rd, 10);
    EXPECT_EQ(d->rs1, 9);
    EXPECT_EQ(d->rs2, 7);
}

TEST(Assembler, MemoryOperandsAndJalrForms) {
    const auto p = assemble("LW x5, -8(x2)\nSB x6, 3(x7)\nJALR x0, 4(x1)\nJALR x0, x1, 4\n");
    EXPECT_EQ(*decode(p.rom_image[0]), (Instruction{Opcode::LW, 5, 2, 0, -8}));
    EXPECT_EQ(*decode(p.rom_image[1]), (Instruction{Opcode::SB, 0, 7, 6, 3}));
    EXPECT_EQ(p.rom_image[2], p.rom_image[3]);
}

TEST(Assembler, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("ADDI x1, x0, 1\nFROB x1\n"), 2);
    EXPECT_EQ(error_line("ADDI x1, x0\n"), 1);
    EXPECT_EQ(error_line("\n\nADDI x1, x40, 1\n"), 3);
    EXPECT_EQ(error_line("BEQ x1, x2, nowhere\n"), 1);
    EXPECT_EQ(error_line("a:\na:\n"), 2);
    EXPECT_EQ(error_line("ADDI x1, x0, 4096\n"), 1);
    EXPECT_EQ(error_line(".org 0x10000000\nADDI x1, x0, 1\n"), 2);
    EXPECT_EQ(error_line(".org 0x2\nADDI x1, x0, 1\n"), 2);
    EXPECT_EQ(error_line(".org 0x40000000\n.word 1\n"), 2);
}

TEST(Assembler, OverlappingOutputIsRejected) {
    EXPECT_THROW(assemble("ADDI x1, x0, 1\n.org 0\nADDI x2, x0, 1\n"), AsmError);
}

TEST(Assembler, CommentsAndBlankLinesIgnored) {
    const auto a = assemble("# header\n\n  ADDI x1, x0, 1   # trailing\n");
    const auto b = assemble("ADDI x1, x0, 1\n");
    EXPECT_EQ(a.rom_image, b.rom_image);
}
