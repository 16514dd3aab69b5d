#pragma once

#include <optional>
#include <string>

#include "destab/nonlin.hpp"
#include "destab/synth.hpp"

namespace destab::cli {

inline constexpr const char* kFormatVersion = "destab-v1";

// Unreadable file, malformed JSON, or a document that does not follow the
// destab-v1 layout.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A system file after loading. `linear` is the plant's linearization (the
// matrices themselves for a linear file); `nonlinear` is present for every
// file and wraps the matrices when the file is linear.
struct LoadedSystem {
  StateSpace linear;
  NonlinearSystem nonlinear;
  bool is_linear = true;
};

LoadedSystem load_system_text(const std::string& text);
LoadedSystem load_system_file(const std::string& path);

AttackSystem load_attack_text(const std::string& text);
AttackSystem load_attack_file(const std::string& path);

std::string system_to_json(const StateSpace& g);
std::string attack_to_json(const AttackSystem& att);

// The built-in cubic oscillator as a nonlinear system file.
std::string example_system_json();

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace destab::cli
