#pragma once

#include <istream>
#include <ostream>
#include <span>

#include "posture/dataset.hpp"
#include "posture/features.hpp"

namespace posture {

/// `subject,label,<feature>_<device>...`, one row per window. Values use the
/// shortest representation that reads back to the same double.
void write_feature_table(std::ostream& out, DeviceSet devices, std::span<const FeatureVector> rows);

/// Reads a feature table into a Dataset whose provenance sources are the row
/// numbers (0-based, header excluded).
Dataset read_feature_table(std::istream& in);

/// Devices whose 15 columns are all present in `data`.
DeviceSet available_devices(const Dataset& data);

/// Column indices of `devices` within `data`. Throws DataError if absent.
std::vector<std::size_t> device_columns(const Dataset& data, DeviceSet devices);

}  // namespace posture
