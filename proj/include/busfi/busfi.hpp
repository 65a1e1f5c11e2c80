#ifndef BUSFI_BUSFI_HPP
#define BUSFI_BUSFI_HPP

#include "busfi/assembler.hpp"
#include "busfi/axi.hpp"
#include "busfi/benchmark.hpp"
#include "busfi/bus_types.hpp"
#include "busfi/campaign.hpp"
#include "busfi/fault.hpp"
#include "busfi/isa.hpp"
#include "busfi/memory_map.hpp"
#include "busfi/register_file.hpp"
#include "busfi/report.hpp"
#include "busfi/results_io.hpp"
#include "busfi/selftest.hpp"
#include "busfi/soc.hpp"
#include "busfi/wishbone.hpp"

#endif
