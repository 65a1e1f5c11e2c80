// busfi: command-line front end for the bus fault-injection simulator.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "busfi/busfi.hpp"

namespace {

enum Exit : int {
    kOk = 0,
    kBadFlags = 2,
    kIoError = 3,
    kSchemaError = 4,
    kInputError = 5,
    kSelftestFailed = 6,
};

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

busfi::BusKind bus_arg(const std::string& s) {
    auto b = busfi::parse_bus_kind(s);
    if (!b) throw Usage("unknown bus '" + s + "' (wishbone, axilite, axi)");
    return *b;
}

std::set<std::string> tmr_arg(const std::string& s, busfi::BusKind bus) {
    std::set<std::string> out;
    if (s.empty()) return out;
    if (busfi::detail::upper(s) == "ALL") {
        for (const auto& d : busfi::register_map(bus)) out.emplace(d.name);
        return out;
    }
    for (auto& n : busfi::detail::split_list(s)) out.insert(n);
    return out;
}

/// One JSON object per transaction; "-" writes to stdout.
void write_trace(const std::string& path, const std::vector<busfi::TraceRecord>& trace) {
    std::ofstream file;
    std::ostream* os = &std::cout;
    if (path != "-") {
        file.open(path, std::ios::binary | std::ios::trunc);
        if (!file) throw std::ios_base::failure("cannot write '" + path + "'");
        os = &file;
    }
    for (const auto& r : trace) {
        nlohmann::json j;
        j["cycle"] = r.cycle;
        j["issue_cycle"] = r.issue_cycle;
        j["kind"] = busfi::trace_kind_name(r.kind);
        j["address"] = r.address;
        j["data"] = r.data;
        j["select"] = r.select;
        j["status"] = busfi::status_name(r.status);
        const auto slave = r.slave();
        j["slave"] = slave ? nlohmann::json(busfi::region_name(*slave)) : nlohmann::json(nullptr);
        *os << j.dump() << '\n';
    }
    if (!*os) throw std::ios_base::failure("trace write failed");
}

std::string record_line(const busfi::InjectionRecord& r) { return busfi::detail::record_body(r).dump(); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cycle-level fault-injection simulator for on-chip buses"};
    app.require_subcommand(1);

    std::string bus_s = "wishbone", program_path, spec_s, tmr_s, config_path, out_override, table_s = "all",
                format_s = "text";
    bool mux_select = false;
    std::string trace_path, reg_format = "csv";
    std::uint64_t budget_mult = 4;
    unsigned workers = 0;
    std::uint64_t seed = 1;
    std::vector<std::string> inputs;

    auto* golden = app.add_subcommand("golden", "run the fault-free baseline");
    golden->add_option("--bus", bus_s, "wishbone | axilite | axi");
    golden->add_option("--program", program_path, "assembly source (default: built-in VerifyPin)");
    golden->add_option("--trace", trace_path, "write the transaction trace as JSON lines (- for stdout)");

    auto* registers = app.add_subcommand("registers", "list the injectable registers of a bus");
    registers->add_option("--bus", bus_s, "wishbone | axilite | axi");
    registers->add_option("--format", reg_format, "csv | text");

    auto* inject = app.add_subcommand("inject", "run one fault and print its record");
    inject->add_option("--bus", bus_s, "wishbone | axilite | axi");
    inject->add_option("--spec", spec_s, "e.g. \"model=BF cycle=63 tgt=ACK:0b0001\"")->required();
    inject->add_option("--program", program_path, "assembly source");
    inject->add_option("--tmr", tmr_s, "comma list of TMR-protected registers, or all");
    inject->add_flag("--mux-select", mux_select, "single-slave read mux");
    inject->add_option("--budget-multiplier", budget_mult, "cycle budget as a multiple of the golden run");
    inject->add_option("--trace", trace_path, "write the faulted trace as JSON lines (- for stdout)");

    auto* campaign = app.add_subcommand("campaign", "run a campaign config file");
    campaign->add_option("config", config_path, "key = value config file")->required();
    campaign->add_option("--out", out_override, "override the config's output path");
    campaign->add_option("--workers", workers, "worker threads (default BUSFI_WORKERS or core count)");

    auto* report = app.add_subcommand("report", "aggregate result files into tables");
    report->add_option("files", inputs, "results files")->required();
    report->add_option("--table", table_s,
                       "outcome_counts | success_register_distribution | data_vs_instruction | effect_matrix | all");
    report->add_option("--format", format_s, "text | csv");

    auto* selftest = app.add_subcommand("selftest", "run the built-in oracle checks");
    selftest->add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "busfi: %s\n", e.what());
        return kBadFlags;
    }

    try {
        auto render_format = [](const std::string& f) {
            if (f == "text") return busfi::RenderFormat::Text;
            if (f == "csv") return busfi::RenderFormat::Csv;
            throw Usage("unknown format '" + f + "' (text, csv)");
        };

        if (*golden) {
            const auto soc = busfi::build_soc(bus_arg(bus_s), busfi::load_program(program_path));
            const auto g = soc.golden();
            std::printf("bus=%s termination=%s cycles=%llu g_authenticated=%u transactions=%zu\n",
                        std::string(busfi::bus_name(soc.kind())).c_str(),
                        std::string(busfi::termination_name(g.termination)).c_str(),
                        static_cast<unsigned long long>(g.cycles), g.g_authenticated, g.trace.size());
            if (!trace_path.empty()) write_trace(trace_path, g.trace);
            return kOk;
        }

        if (*registers) {
            const auto bus = bus_arg(bus_s);
            busfi::Table t;
            t.header = {"name", "width", "group"};
            for (const auto& d : busfi::register_map(bus))
                t.rows.push_back({std::string(d.name), std::to_string(d.width), std::string(busfi::group_name(d.group))});
            std::fputs(busfi::render(t, render_format(reg_format)).c_str(), stdout);
            return kOk;
        }

        if (*inject) {
            auto spec = busfi::parse_spec(spec_s);
            const auto bus = spec.bus.value_or(bus_arg(bus_s));
            if (inject->count("--bus") && spec.bus && *spec.bus != bus_arg(bus_s))
                throw Usage("--bus disagrees with bus= inside --spec");
            spec.bus = bus;
            busfi::HardeningConfig h{tmr_arg(tmr_s, bus), mux_select};
            const auto soc = busfi::build_soc(bus, busfi::load_program(program_path), h);
            const busfi::RegisterFile regs(soc.registers(), h);
            busfi::validate_spec(spec, regs, 32);
            const auto g = soc.golden();
            const auto budget = g.cycles * budget_mult;
            if (spec.cycle >= budget) throw Usage("cycle is beyond the cycle budget");
            const auto run = soc.simulate(spec, budget);
            std::printf("%s\n", record_line(busfi::make_record(spec, run, g, bus)).c_str());
            if (!trace_path.empty()) write_trace(trace_path, run.trace);
            return kOk;
        }

        if (*campaign) {
            auto config = busfi::parse_config(busfi::read_text_file(config_path));
            if (!out_override.empty()) config.out = out_override;
            if (config.out.empty()) throw Usage("no output path (set out = ... or --out)");
            const auto result = busfi::run_campaign(config, busfi::load_program(config.program),
                                                    workers ? workers : busfi::worker_count());
            busfi::persist(result, config.out);
            std::fputs(busfi::render(busfi::aggregate(result.records, busfi::TableKind::OutcomeCounts),
                                     busfi::RenderFormat::Text)
                           .c_str(),
                       stdout);
            std::printf("wrote %zu records to %s\n", result.records.size(), config.out.c_str());
            return kOk;
        }

        if (*report) {
            std::vector<busfi::InjectionRecord> records;
            for (const auto& path : inputs) {
                auto f = busfi::load(path);
                records.insert(records.end(), f.records.begin(), f.records.end());
            }
            std::vector<busfi::TableKind> kinds;
            if (table_s == "all") {
                kinds.assign(std::begin(busfi::kAllTables), std::end(busfi::kAllTables));
            } else {
                auto k = busfi::parse_table_kind(table_s);
                if (!k) throw Usage("unknown table '" + table_s + "'");
                kinds.push_back(*k);
            }
            const auto fmt = render_format(format_s);
            for (std::size_t i = 0; i < kinds.size(); ++i) {
                const auto t = busfi::aggregate(records, kinds[i]);
                if (kinds.size() > 1) std::printf("%s# %s\n", i ? "\n" : "", t.title.c_str());
                std::fputs(busfi::render(t, fmt).c_str(), stdout);
            }
            return kOk;
        }

        if (*selftest) {
            bool all = true;
            for (const auto& c : busfi::run_selftest(seed)) {
                std::printf("[%s] %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
                all &= c.pass;
            }
            return all ? kOk : kSelftestFailed;
        }
    } catch (const Usage& e) {
        std::fprintf(stderr, "busfi: %s\n", e.what());
        return kBadFlags;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "busfi: %s\n", e.what());
        return kIoError;
    } catch (const busfi::ResultsError& e) {
        std::fprintf(stderr, "busfi: %s\n", e.what());
        return kSchemaError;
    } catch (const busfi::ConfigError& e) {
        std::fprintf(stderr, "busfi: config: %s\n", e.what());
        return kInputError;
    } catch (const busfi::FaultError& e) {
        std::fprintf(stderr, "busfi: fault spec: %s\n", e.what());
        return kInputError;
    } catch (const busfi::RegisterError& e) {
        std::fprintf(stderr, "busfi: register: %s\n", e.what());
        return kInputError;
    } catch (const busfi::AsmError& e) {
        std::fprintf(stderr, "busfi: program: %s\n", e.what());
        return kInputError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "busfi: %s\n", e.what());
        return 1;
    }
    return kOk;
}
