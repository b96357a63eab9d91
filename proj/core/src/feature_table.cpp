#include "posture/feature_table.hpp"

#include <charconv>
#include <cmath>
#include <string>

#include "posture/config.hpp"
#include "posture/errors.hpp"

namespace posture {
namespace {

void append_shortest(std::string& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

}  // namespace

void write_feature_table(std::ostream& out, DeviceSet devices, std::span<const FeatureVector> rows) {
    std::string line = "subject,label";
    for (const auto& c : feature_columns(devices)) line += "," + c;
    line += '\n';
    out << line;
    for (const auto& r : rows) {
        line.clear();
        line += r.subject;
        line += ',';
        line += to_string(r.label);
        for (double v : r.values) {
            line += ',';
            append_shortest(line, v);
        }
        line += '\n';
        out << line;
    }
}

Dataset read_feature_table(std::istream& in) {
    using Kind = ParseError::Kind;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(Kind::empty_input, 1, "feature table is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split(line, ',');
    if (header.size() < 3 || header[0] != "subject" || header[1] != "label") {
        throw ParseError(Kind::bad_header, 1, "feature table header must start with subject,label");
    }
    Dataset data(std::vector<std::string>(header.begin() + 2, header.end()));
    const std::size_t p = data.features();
    std::vector<double> values(p);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != p + 2) throw ParseError(Kind::bad_field_count, line_no, "wrong number of columns");
        Posture label;
        try {
            label = parse_posture(fields[1]);
        } catch (const DataError&) {
            throw ParseError(Kind::bad_label, line_no, "unknown label '" + fields[1] + "'");
        }
        if (label == Posture::out_of_view) throw ParseError(Kind::bad_label, line_no, "out_of_view row in feature table");
        for (std::size_t j = 0; j < p; ++j) {
            const auto& f = fields[j + 2];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), values[j]);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                throw ParseError(Kind::non_numeric, line_no, "column " + header[j + 2] + " is not a number");
            }
            if (!std::isfinite(values[j])) throw ParseError(Kind::non_finite, line_no, header[j + 2] + " is not finite");
        }
        data.add_row(values, label, data.intern_subject(fields[0]));
    }
    return data;
}

namespace {

std::optional<std::vector<std::size_t>> find_device_columns(const Dataset& data, Device d) {
    std::vector<std::size_t> cols;
    const auto& names = data.feature_names();
    for (auto name : kFeatureNames) {
        const std::string want = std::string(name) + "_" + std::string(to_string(d));
        const auto it = std::find(names.begin(), names.end(), want);
        if (it == names.end()) return std::nullopt;
        cols.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    return cols;
}

}  // namespace

DeviceSet available_devices(const Dataset& data) {
    const bool w = find_device_columns(data, Device::wrist).has_value();
    const bool a = find_device_columns(data, Device::ankle).has_value();
    if (w && a) return DeviceSet::both;
    if (w) return DeviceSet::wrist;
    if (a) return DeviceSet::ankle;
    throw DataError("feature table has no complete device column block");
}

std::vector<std::size_t> device_columns(const Dataset& data, DeviceSet devices) {
    std::vector<std::size_t> cols;
    for (Device d : {Device::wrist, Device::ankle}) {
        if (!includes(devices, d)) continue;
        const auto c = find_device_columns(data, d);
        if (!c) throw DataError("feature table lacks " + std::string(to_string(d)) + " columns");
        cols.insert(cols.end(), c->begin(), c->end());
    }
    return cols;
}

}  // namespace posture
