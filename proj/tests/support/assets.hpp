#pragma once

// Loads schemes and configurations from the repository's assets/ tree,
// failing the enclosing test with the parser diagnostics on any problem.

#include <doctest.h>

#include <memory>
#include <string>

#include <rbl/text_format.hpp>

namespace rbl::testing {

inline std::string asset_path(const std::string& name) {
  return std::string(RBL_ASSET_DIR) + "/" + name;
}

inline std::string diag_text(const rbl::Diagnostics& ds) {
  std::string out;
  for (const auto& d : ds) out += format_diagnostic(d) + "\n";
  return out;
}

struct LoadedSystem {
  std::unique_ptr<rbl::Scheme> scheme;  // stable address; the bundle points in
  rbl::ConfigBundle bundle;
};

inline std::unique_ptr<rbl::Scheme> load_scheme_asset(const std::string& file) {
  auto parsed = rbl::load_scheme_file(asset_path(file));
  REQUIRE_MESSAGE(!has_errors(parsed.diags), diag_text(parsed.diags));
  return std::make_unique<rbl::Scheme>(std::move(parsed.scheme));
}

inline LoadedSystem load_system_asset(const std::string& scheme_file,
                                      const std::string& config_file) {
  LoadedSystem out;
  out.scheme = load_scheme_asset(scheme_file);
  auto parsed = rbl::load_config_file(asset_path(config_file), *out.scheme);
  REQUIRE_MESSAGE(!has_errors(parsed.diags), diag_text(parsed.diags));
  out.bundle = std::move(parsed.bundle);
  return out;
}

}  // namespace rbl::testing
