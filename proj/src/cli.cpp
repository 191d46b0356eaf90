#include "mavact/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mavact/errors.hpp"
#include "mavact/evalbench.hpp"
#include "mavact/synthgen.hpp"
#include "mavact/trainer.hpp"

namespace mavact::cli {

namespace fs = std::filesystem;

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"gen-data", "train-teacher", "distill", "eval", "bench", "ablate"};
    return names;
}

namespace {

std::string in_dir(const std::string& out_dir, const std::string& path) {
    return fs::path(path).is_absolute() ? path : (fs::path(out_dir) / path).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << content;
}

std::string run_meta(const RunConfig& cfg, const std::string& command) {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = to_json(cfg);
    return j.dump();
}

struct Prepared {
    ClipDataset data;
    Split split;
};

Prepared load_data(const RunConfig& cfg, const std::string& out_dir) {
    Prepared p;
    p.data = read_dataset(in_dir(out_dir, cfg.data.path));
    p.split = split_dataset(p.data, cfg.data.split());
    return p;
}

std::string teacher_path(const std::string& out) { return in_dir(out, "teacher.ckpt"); }
std::string student_path(const std::string& out) { return in_dir(out, "student.ckpt"); }

std::string one_line(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

}  // namespace

void dispatch(const std::string& command, const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
        throw std::invalid_argument("unknown command '" + command + "'");
    }
    fs::create_directories(out_dir);
    write_file(in_dir(out_dir, "config.resolved.json"), serialize(cfg) + "\n");
    write_file(in_dir(out_dir, "VERSION"), std::string(kToolVersion) + "\n");

    if (command == "gen-data") {
        const auto path = in_dir(out_dir, cfg.data.path);
        auto data = synth::gen_dataset(cfg.data.dataset_spec(), path);
        log << "wrote " << data.size() << " clips to " << path << '\n';
    } else if (command == "train-teacher") {
        auto p = load_data(cfg, out_dir);
        auto r = train::train_teacher(cfg.train, cfg.teacher, p.data, p.split, &log);
        train::save_model(teacher_path(out_dir), r, run_meta(cfg, command));
        write_file(in_dir(out_dir, "teacher_history.csv"), r.history.csv());
        log << "teacher final train accuracy " << r.history.final_train_accuracy() << '\n';
    } else if (command == "distill") {
        auto p = load_data(cfg, out_dir);
        if (!fs::exists(teacher_path(out_dir))) {
            // No pretrained teacher yet: train one with the same settings first.
            log << "no teacher checkpoint in " << out_dir << ", training one\n";
            auto t = train::train_teacher(cfg.train, cfg.teacher, p.data, p.split, &log);
            train::save_model(teacher_path(out_dir), t, run_meta(cfg, "train-teacher"));
            write_file(in_dir(out_dir, "teacher_history.csv"), t.history.csv());
        }
        auto teacher = train::load_teacher(teacher_path(out_dir), cfg.teacher);
        auto r = train::distill_student(cfg.train, cfg.student, p.data, p.split, teacher, &log);
        train::save_model(student_path(out_dir), r, run_meta(cfg, command));
        write_file(in_dir(out_dir, "student_history.csv"), r.history.csv());
        log << "student final test accuracy " << r.history.final_test_accuracy() << '\n';
    } else if (command == "eval") {
        auto p = load_data(cfg, out_dir);
        auto student = train::load_student(student_path(out_dir), cfg.student);
        auto rep = bench::evaluate(student, p.data, p.split.test);
        write_file(in_dir(out_dir, "eval.json"), bench::to_json(rep) + "\n");
        write_file(in_dir(out_dir, "confusion.csv"), bench::confusion_csv(rep));
        log << "accuracy " << rep.accuracy << " macro precision " << rep.macro_precision << " macro recall "
            << rep.macro_recall << '\n';
        for (const auto& w : rep.warnings) log << "warning: " << w << '\n';
    } else if (command == "bench") {
        nn::Backbone teacher(cfg.teacher);
        nn::Backbone student(cfg.student);
        if (fs::exists(teacher_path(out_dir))) teacher = train::load_teacher(teacher_path(out_dir), cfg.teacher);
        if (fs::exists(student_path(out_dir))) student = train::load_student(student_path(out_dir), cfg.student);
        const auto accel = cfg.bench.device == "cpu" ? std::string() : cfg.bench.device;
        std::vector<bench::BenchmarkReport> rows = {
            bench::benchmark(teacher, "teacher", accel, cfg.bench.warmup, cfg.bench.reps),
            bench::benchmark(student, "student", accel, cfg.bench.warmup, cfg.bench.reps)};
        write_file(in_dir(out_dir, "bench.json"), bench::to_json(rows) + "\n");
        const auto table = bench::to_table(rows);
        write_file(in_dir(out_dir, "bench.txt"), table);
        log << table;
    } else if (command == "ablate") {
        auto p = load_data(cfg, out_dir);
        auto teacher = train::load_teacher(teacher_path(out_dir), cfg.teacher);
        auto rep = train::run_ablation(cfg.train, cfg.student, p.data, p.split, teacher, cfg.train.trials, &log);
        write_file(in_dir(out_dir, "ablate.json"), rep.json() + "\n");
        for (const auto* rows : {&rep.components, &rep.stage_sweep, &rep.sokd_compare}) {
            for (const auto& r : *rows) {
                log << r.name << ": " << 100.0 * r.report.mean << "% +- " << 100.0 * r.report.std << "% (n="
                    << r.report.accuracies.size() << ")\n";
            }
        }
        for (const auto& f : rep.flags) log << "flag: " << f << '\n';
    }
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"MAV action recognition: data generation, distillation, evaluation, benchmarking"};
    std::string command;
    std::string config_path;
    std::string out_dir = "run";
    app.add_option("command", command, "gen-data | train-teacher | distill | eval | bench | ablate")->required();
    app.add_option("-c,--config", config_path, "JSON config file (defaults when omitted)");
    app.add_option("-o,--out", out_dir, "output directory");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        log << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: usage: " << one_line(e.what()) << std::endl;
        return kExitUsage;
    }
    if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
        err << "error: usage: unknown command '" << command << "'" << std::endl;
        return kExitUsage;
    }
    if (const char* env = std::getenv("MAVACT_OUT_DIR"); env && *env) out_dir = env;

    RunConfig cfg;
    try {
        cfg = config_path.empty() ? parse_config_text("") : parse_config(config_path);
        if (const char* env = std::getenv("MAVACT_DEVICE"); env && *env) {
            cfg.bench.device = env;
            cfg.resolve();
        }
    } catch (const ConfigError& e) {
        err << "error: config: " << one_line(e.what()) << std::endl;
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: config: " << one_line(e.what()) << std::endl;
        return kExitUsage;
    }

    try {
        dispatch(command, cfg, out_dir, log);
    } catch (const ConfigError& e) {
        err << "error: config: " << one_line(e.what()) << std::endl;
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: io: " << one_line(e.what()) << std::endl;
        return kExitRuntime;
    } catch (const NumericError& e) {
        err << "error: numeric: " << one_line(e.what()) << std::endl;
        return kExitRuntime;
    } catch (const EnvironmentError& e) {
        err << "error: environment: " << one_line(e.what()) << std::endl;
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: runtime: " << one_line(e.what()) << std::endl;
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace mavact::cli
