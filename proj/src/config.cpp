#include "uleen/config.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uleen {

std::string to_string(TrainMode mode) {
  return mode == TrainMode::kOneshot ? "oneshot" : "multishot";
}

TrainMode train_mode_from_string(const std::string& name) {
  if (name == "oneshot") return TrainMode::kOneshot;
  if (name == "multishot") return TrainMode::kMultishot;
  throw std::invalid_argument("unknown training mode: " + name);
}

namespace {

[[noreturn]] void bad_line(size_t line, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " +
                              what);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

uint64_t parse_uint(const std::string& v, size_t line) {
  char* end = nullptr;
  const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0') bad_line(line, "expected an integer");
  return x;
}

double parse_real(const std::string& v, size_t line) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0') bad_line(line, "expected a number");
  return x;
}

bool parse_bool(const std::string& v, size_t line) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  bad_line(line, "expected a boolean");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string raw;
  size_t line_no = 0;
  SubmodelGeometry* current = nullptr;
  while (std::getline(in, raw)) {
    ++line_no;
    const size_t comment = raw.find_first_of("#;");
    if (comment != std::string::npos) raw.erase(comment);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') bad_line(line_no, "unterminated section header");
      const std::string section = trim(line.substr(1, line.size() - 2));
      if (section != "submodel") {
        bad_line(line_no, "unknown section [" + section + "]");
      }
      cfg.model.submodels.emplace_back();
      current = &cfg.model.submodels.back();
      continue;
    }

    const size_t eq = line.find('=');
    if (eq == std::string::npos) bad_line(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) bad_line(line_no, "empty key or value");

    if (current != nullptr) {
      if (key == "inputs_per_filter") {
        current->inputs_per_filter =
            static_cast<uint32_t>(parse_uint(value, line_no));
      } else if (key == "entries") {
        const uint64_t entries = parse_uint(value, line_no);
        if (entries < 2 || !std::has_single_bit(entries)) {
          bad_line(line_no, "entries must be a power of two >= 2");
        }
        current->entries_log2 =
            static_cast<uint32_t>(std::countr_zero(entries));
      } else if (key == "hashes") {
        current->hash_count = static_cast<uint32_t>(parse_uint(value, line_no));
      } else {
        bad_line(line_no, "unknown submodel key '" + key + "'");
      }
      continue;
    }

    if (key == "bits_per_input") {
      cfg.model.bits_per_input =
          static_cast<uint32_t>(parse_uint(value, line_no));
    } else if (key == "encoder") {
      cfg.model.encoder_mode = encoder_mode_from_string(value);
    } else if (key == "mode") {
      cfg.mode = train_mode_from_string(value);
    } else if (key == "epochs") {
      cfg.train.epochs = static_cast<uint32_t>(parse_uint(value, line_no));
    } else if (key == "batch_size") {
      cfg.train.batch_size = static_cast<uint32_t>(parse_uint(value, line_no));
    } else if (key == "learning_rate") {
      cfg.train.learning_rate = parse_real(value, line_no);
    } else if (key == "adam_beta1") {
      cfg.train.adam_beta1 = parse_real(value, line_no);
    } else if (key == "adam_beta2") {
      cfg.train.adam_beta2 = parse_real(value, line_no);
    } else if (key == "adam_epsilon") {
      cfg.train.adam_epsilon = parse_real(value, line_no);
    } else if (key == "dropout") {
      cfg.train.dropout_p = parse_real(value, line_no);
    } else if (key == "prune_ratio") {
      cfg.train.prune_ratio = parse_real(value, line_no);
    } else if (key == "augment") {
      cfg.train.augment = parse_bool(value, line_no);
    } else if (key == "fine_tune_epochs") {
      cfg.fine_tune_epochs = static_cast<uint32_t>(parse_uint(value, line_no));
    } else if (key == "bleach") {
      cfg.bleach = bleach_mode_from_string(value);
    } else if (key == "val_fraction") {
      cfg.val_fraction = parse_real(value, line_no);
      if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0) {
        bad_line(line_no, "val_fraction must be in [0, 1)");
      }
    } else if (key == "seed") {
      cfg.train.seed = parse_uint(value, line_no);
    } else {
      bad_line(line_no, "unknown key '" + key + "'");
    }
  }

  if (cfg.model.submodels.empty()) {
    throw std::invalid_argument("config: no [submodel] section");
  }
  validate(cfg.model);
  multishot::validate(cfg.train);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open config");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace uleen
