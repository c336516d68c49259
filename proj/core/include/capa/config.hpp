// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAPA_CONFIG_HPP
#define CAPA_CONFIG_HPP

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace capa {

/// Config file parse/lookup failure; the message names the offending line or
/// field.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Flat sectioned key-value config ("[section]" headers, "key = value" lines,
/// '#' comments). Keys are addressed as "section.key".
class Config {
  public:
    static Config parse_file(const std::string &path);
    static Config parse_string(const std::string &text, const std::string &origin = "<string>");

    bool has(const std::string &key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string &key) const;
    double get_double(const std::string &key) const;
    long get_int(const std::string &key) const;
    Eigen::Vector3d get_vec3(const std::string &key) const; // three whitespace-separated reals

    std::string get_string(const std::string &key, const std::string &fallback) const;
    double get_double(const std::string &key, double fallback) const;
    long get_int(const std::string &key, long fallback) const;

    void set(const std::string &key, const std::string &value) { values_[key] = value; }

    const std::map<std::string, std::string> &entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

} // namespace capa

#endif
