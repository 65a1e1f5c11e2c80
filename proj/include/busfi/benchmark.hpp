#ifndef BUSFI_BENCHMARK_HPP
#define BUSFI_BENCHMARK_HPP

#include <string_view>

#include "busfi/assembler.hpp"

namespace busfi {

/// VerifyPin V0, identical to programs/verifypin.asm (a test keeps them in sync).
inline constexpr std::string_view kVerifyPinSource = R"asm(
# VerifyPin V0 for the busfi ISA.
#
# The compare loop returns 1 from inside the loop body, so only the first
# byte of each PIN is compared. This is kept on purpose: it is the original
# benchmark's behaviour.

        .org 0x00000000
_start:
        JAL   ra, verifyPIN
        ECALL_HALT

# byteArrayCompare(a0 = a1, a1 = a2, a2 = size) -> a0
byteArrayCompare:
        ADDI  t0, zero, 0
bac_loop:
        BGE   t0, a2, bac_done
        ADD   t1, a0, t0
        LBU   t1, 0(t1)
        ADD   t2, a1, t0
        LBU   t2, 0(t2)
        BNE   t1, t2, bac_fail
        ADDI  a0, zero, 1
        JALR  zero, 0(ra)
bac_fail:
        ADDI  a0, zero, 0
        JALR  zero, 0(ra)
bac_done:
        ADDI  a0, zero, 0
        JALR  zero, 0(ra)

verifyPIN:
        ADDI  s0, ra, 0
        LUI   s1, %hi(g_authenticated)
        SW    zero, %lo(g_authenticated)(s1)
        LUI   t0, %hi(g_ptc)
        LW    t0, %lo(g_ptc)(t0)
        BGE   zero, t0, vp_end
        LUI   a0, %hi(g_userPin)
        ADDI  a0, a0, %lo(g_userPin)
        LUI   a1, %hi(g_cardPin)
        ADDI  a1, a1, %lo(g_cardPin)
        ADDI  a2, zero, 4
        JAL   ra, byteArrayCompare
        ADDI  t0, zero, 1
        BNE   a0, t0, vp_fail
        ADDI  t1, zero, 1
        SW    t1, %lo(g_authenticated)(s1)
        JAL   zero, vp_end
vp_fail:
        SW    zero, %lo(g_authenticated)(s1)
vp_end:
        JALR  zero, 0(s0)

        .org 0x10000100
g_userPin:       .byte 0, 0, 0, 0
g_cardPin:       .byte 4, 3, 2, 1
g_authenticated: .word 0
g_ptc:           .word 3
)asm";

inline const Program& verifypin() {
    static const Program prog = assemble(kVerifyPinSource);
    return prog;
}

}  // namespace busfi

#endif
