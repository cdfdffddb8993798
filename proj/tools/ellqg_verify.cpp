// Command-line driver for the verification suites.
//
// Exit codes: 0 when every check passed, 1 when some check exceeded its
// tolerance, 2 for usage errors, bad configuration, or parameter-sampling
// failures.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ellqg/suites.hpp"

namespace {

struct Options {
  ellqg::SuiteConfig cfg;
  std::string format = "text";
  std::string out;
};

void print_usage(std::ostream& os) {
  os << "usage: ellqg_verify [options]\n"
        "\n"
        "Runs randomized numerical verification of the elliptic library's\n"
        "identities and prints a per-check report.\n"
        "\n"
        "options:\n"
        "  --suite NAME    theta | ybe | shuffle | weightfn | orthogonality |\n"
        "                  envelope | gz | rll | consistency | all  (default all)\n"
        "  --n N           evaluation points, 1..8            (default 3)\n"
        "  --k-max K       subset-size sweep limit, 0..4      (default 3)\n"
        "  --trials T      sampled points per check           (default 20)\n"
        "  --seed S        master seed, decimal               (default 1)\n"
        "  --tol X         override every tolerance; 0 keeps per-check defaults\n"
        "  --guard X       resonance guard for sampling       (default 1e-3)\n"
        "  --format F      text | json                        (default text)\n"
        "  --out FILE      write the report to FILE instead of stdout\n"
        "  --config FILE   key=value file with the keys above; flags win\n"
        "  --help          this message\n";
}

[[noreturn]] void fail_usage(const std::string& message) {
  std::cerr << "ellqg_verify: " << message << "\n";
  print_usage(std::cerr);
  std::exit(2);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail_usage("value for " + key + " is not an integer: '" + value + "'");
  }
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail_usage("value for " + key + " is not a seed: '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail_usage("value for " + key + " is not a number: '" + value + "'");
  }
}

void apply(Options& opt, const std::string& key, const std::string& value) {
  if (key == "suite") {
    opt.cfg.suite = value;
  } else if (key == "n") {
    opt.cfg.n = static_cast<int>(parse_int(key, value));
  } else if (key == "k-max" || key == "k_max") {
    opt.cfg.k_max = static_cast<int>(parse_int(key, value));
  } else if (key == "trials") {
    opt.cfg.trials = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    opt.cfg.seed = parse_seed(key, value);
  } else if (key == "tol") {
    opt.cfg.tol = parse_double(key, value);
  } else if (key == "guard") {
    opt.cfg.guard = parse_double(key, value);
  } else if (key == "format") {
    opt.format = value;
  } else if (key == "out") {
    opt.out = value;
  } else {
    fail_usage("unknown option '" + key + "'");
  }
}

void load_config_file(Options& opt, const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_usage("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail_usage(path + ":" + std::to_string(lineno) +
                 ": expected key=value, got '" + line + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply(opt, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);

  // Flags override the config file, so resolve the file first no matter
  // where --config sits on the command line.
  Options opt;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--help" || args[i] == "-h") {
      print_usage(std::cout);
      return 0;
    }
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) fail_usage("--config needs a file path");
      load_config_file(opt, args[i + 1]);
    } else if (args[i].rfind("--config=", 0) == 0) {
      load_config_file(opt, args[i].substr(9));
    }
  }

  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string arg = args[i];
    if (arg.rfind("--", 0) != 0) fail_usage("unexpected argument '" + arg + "'");
    std::string key, value;
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      key = arg.substr(2, eq - 2);
      value = arg.substr(eq + 1);
    } else {
      key = arg.substr(2);
      if (key == "config") {
        ++i;  // value consumed in the first pass
        continue;
      }
      if (i + 1 >= args.size()) fail_usage("--" + key + " needs a value");
      value = args[++i];
    }
    if (key == "config") continue;  // handled in the first pass
    apply(opt, key, value);
  }

  if (opt.format != "text" && opt.format != "json")
    fail_usage("unknown format '" + opt.format + "'");

  ellqg::SuiteReport report;
  try {
    report = ellqg::run_suite(opt.cfg);
  } catch (const std::invalid_argument& e) {
    fail_usage(e.what());
  } catch (const std::exception& e) {
    std::cerr << "ellqg_verify: sampling failed: " << e.what() << "\n";
    return 2;
  }

  const std::string rendered = ellqg::emit_report(report, opt.format);
  if (opt.out.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(opt.out);
    if (!out) {
      std::cerr << "ellqg_verify: cannot write '" << opt.out << "'\n";
      return 2;
    }
    out << rendered;
  }
  return report.pass ? 0 : 1;
}
