// SPDX-License-Identifier: Apache-2.0
//
// capa-coupling: mutual coupling-aware beamforming for continuous aperture arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "capa/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace capa {

namespace {

std::string trim(const std::string &s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

Config Config::parse_file(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

Config Config::parse_string(const std::string &text, const std::string &origin) {
    Config config;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto comment = line.find('#');
        if (comment != std::string::npos)
            line = line.substr(0, comment);
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        config.values_[section.empty() ? key : section + "." + key] = value;
    }
    return config;
}

std::string Config::get_string(const std::string &key) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        throw ConfigError("missing required config field '" + key + "'");
    return it->second;
}

double Config::get_double(const std::string &key) const {
    const std::string raw = get_string(key);
    char *end = nullptr;
    const double value = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0')
        throw ConfigError("config field '" + key + "' is not a number: '" + raw + "'");
    return value;
}

long Config::get_int(const std::string &key) const {
    const std::string raw = get_string(key);
    char *end = nullptr;
    const long value = std::strtol(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0')
        throw ConfigError("config field '" + key + "' is not an integer: '" + raw + "'");
    return value;
}

Eigen::Vector3d Config::get_vec3(const std::string &key) const {
    std::istringstream in(get_string(key));
    Eigen::Vector3d v;
    if (!(in >> v.x() >> v.y() >> v.z()))
        throw ConfigError("config field '" + key + "' is not a 3-vector");
    std::string rest;
    if (in >> rest)
        throw ConfigError("config field '" + key + "' has trailing content");
    return v;
}

std::string Config::get_string(const std::string &key, const std::string &fallback) const {
    return has(key) ? get_string(key) : fallback;
}

double Config::get_double(const std::string &key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

long Config::get_int(const std::string &key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

} // namespace capa
