#pragma once

#include <filesystem>
#include <iosfwd>

#include "hmminf/model.hpp"

namespace hmminf {

/// Model document: plain-text sections `[initial]`, `[transition]` and
/// `[emission]`; see README for the grammar. Numbers are written in
/// shortest round-trip form so a written model reads back bit-identical.
void write_model(std::ostream& os, const HmmModel& model);
HmmModel read_model(std::istream& is);

void write_model_file(const std::filesystem::path& path, const HmmModel& model);
HmmModel read_model_file(const std::filesystem::path& path);

/// CSV with an optional header row; columns `label,value` or `value`.
/// Without a label column the labels are 1..n.
ObservationSequence read_observations(std::istream& is);
ObservationSequence read_observations_file(const std::filesystem::path& path);

void write_observations(std::ostream& os, const ObservationSequence& obs);

}  // namespace hmminf
