#include "gpd/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "gpd/errors.hpp"

namespace gpd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

bool parse_int(const std::string& s, long long& out) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "?" || s == "NA" || s == "na" || s == "NaN" || s == "nan";
}

std::string format17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void Dataset::validate() const {
    if (static_cast<std::size_t>(X.rows()) != y.size()) {
        throw InputError("dataset '" + name + "': " + std::to_string(X.rows()) + " rows but " +
                         std::to_string(y.size()) + " labels");
    }
    if (num_classes < 1) throw InputError("dataset '" + name + "': no classes");
    for (int label : y) {
        if (label < 0 || label >= num_classes) {
            throw InputError("dataset '" + name + "': label " + std::to_string(label) + " out of range");
        }
    }
    if (!X.allFinite()) throw InputError("dataset '" + name + "': non-finite feature value");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    out.name = name;
    out.num_classes = num_classes;
    out.class_names = class_names;
    out.feature_names = feature_names;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
    out.y.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        out.X.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
        out.y.push_back(y[static_cast<std::size_t>(rows[k])]);
    }
    return out;
}

Dataset parse_csv(const std::string& text, const LabelColumn& label, const std::string& name) {
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line_numbers;
    {
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);  // UTF-8 BOM
            if (trim(line).empty()) continue;
            rows.push_back(split_fields(line));
            line_numbers.push_back(line_no);
        }
    }
    if (rows.empty()) throw InputError(name + ": no data rows");
    const std::size_t width = rows.front().size();
    if (width < 2) throw InputError(name + ": need at least one feature and a label column");

    bool header = false;
    for (std::size_t j = 0; j + 1 < width; ++j) {
        double v;
        if (!parse_double(rows.front()[j], v) && !is_missing(rows.front()[j])) header = true;
    }
    std::size_t label_col = width - 1;
    if (!label.name.empty()) {
        if (!header) throw InputError(name + ": a named label column requires a header row");
        const auto it = std::find(rows.front().begin(), rows.front().end(), label.name);
        if (it == rows.front().end()) throw InputError(name + ": no column named '" + label.name + "'");
        label_col = static_cast<std::size_t>(it - rows.front().begin());
    }

    Dataset data;
    data.name = name;
    const std::size_t first = header ? 1 : 0;
    const std::size_t n = rows.size() - first;
    if (n == 0) throw InputError(name + ": header but no data rows");
    data.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width - 1));
    if (header) {
        for (std::size_t j = 0; j < width; ++j) {
            if (j != label_col) data.feature_names.push_back(rows.front()[j]);
        }
    }
    std::vector<std::string> label_text;
    label_text.reserve(n);
    for (std::size_t r = first; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        const std::string where = name + ": row " + std::to_string(line_numbers[r]);
        if (fields.size() != width) {
            throw InputError(where + " has " + std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(width));
        }
        Eigen::Index col = 0;
        for (std::size_t j = 0; j < width; ++j) {
            if (j == label_col) continue;
            double v;
            if (is_missing(fields[j])) throw InputError(where + ": missing value in column " + std::to_string(j + 1));
            if (!parse_double(fields[j], v) || !std::isfinite(v)) {
                throw InputError(where + ": cannot parse '" + fields[j] + "' as a number");
            }
            data.X(static_cast<Eigen::Index>(r - first), col++) = v;
        }
        if (fields[label_col].empty()) throw InputError(where + ": missing label");
        label_text.push_back(fields[label_col]);
    }

    bool integer_labels = true;
    for (const auto& s : label_text) {
        long long v;
        if (!parse_int(s, v)) {
            integer_labels = false;
            break;
        }
    }
    std::map<std::string, int> index;
    if (integer_labels) {
        std::map<long long, std::string> sorted;
        for (const auto& s : label_text) {
            long long v;
            parse_int(s, v);
            sorted.emplace(v, s);
        }
        for (const auto& [v, s] : sorted) {
            index.emplace(s, static_cast<int>(data.class_names.size()));
            data.class_names.push_back(s);
        }
        // Different spellings of the same integer ("1" and "01") share a class.
        for (const auto& s : label_text) {
            if (!index.count(s)) {
                long long v;
                parse_int(s, v);
                index.emplace(s, index.at(sorted.at(v)));
            }
        }
    } else {
        for (const auto& s : label_text) {
            if (index.emplace(s, static_cast<int>(data.class_names.size())).second) {
                data.class_names.push_back(s);
            }
        }
    }
    data.y.reserve(n);
    for (const auto& s : label_text) data.y.push_back(index.at(s));
    data.num_classes = static_cast<int>(data.class_names.size());
    data.validate();
    return data;
}

Dataset load_csv(const std::string& path, const LabelColumn& label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), label, path);
}

std::string format_csv(const Dataset& data) {
    data.validate();
    std::string out;
    for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
        out += static_cast<std::size_t>(j) < data.feature_names.size()
                   ? data.feature_names[static_cast<std::size_t>(j)]
                   : "x" + std::to_string(j);
        out += ',';
    }
    out += "label\n";
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.X.cols(); ++j) {
            out += format17(data.X(i, j));
            out += ',';
        }
        const int y = data.y[static_cast<std::size_t>(i)];
        out += static_cast<std::size_t>(y) < data.class_names.size()
                   ? data.class_names[static_cast<std::size_t>(y)]
                   : std::to_string(y);
        out += '\n';
    }
    return out;
}

void save_csv(const Dataset& data, const std::string& path) {
    const std::string text = format_csv(data);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << text;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (X.cols() != mean.size()) throw InputError("standardize: feature dimension mismatch");
    return ((X.rowwise() - mean).array().rowwise() / sd.array()).matrix();
}

Dataset Standardizer::apply(const Dataset& data) const {
    Dataset out = data;
    out.X = apply(data.X);
    return out;
}

Standardizer fit_standardizer(const Eigen::MatrixXd& X) {
    if (X.rows() == 0) throw InputError("standardize: empty training set");
    Standardizer s;
    s.mean = X.colwise().mean();
    s.sd = ((X.rowwise() - s.mean).array().square().colwise().mean()).sqrt();
    for (Eigen::Index j = 0; j < s.sd.size(); ++j) {
        if (!(s.sd(j) > 0.0)) s.sd(j) = 1.0;
    }
    return s;
}

Standardized standardize(const Dataset& train, const std::vector<Dataset>& others) {
    Standardized out;
    out.scaler = fit_standardizer(train.X);
    out.train = out.scaler.apply(train);
    for (const auto& d : others) out.others.push_back(out.scaler.apply(d));
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL));
}

namespace {

/// Splits `total` items across classes proportionally to `sizes`, rounding
/// by largest remainder (ties to the lower class index).
std::vector<std::size_t> allocate(const std::vector<std::size_t>& sizes, double fraction) {
    std::size_t n = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> out(sizes.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        const double exact = fraction * static_cast<double>(sizes[c]);
        out[c] = static_cast<std::size_t>(std::floor(exact));
        used += out[c];
        rem.emplace_back(exact - std::floor(exact), c);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; used < total && k < rem.size(); ++k) {
        const std::size_t c = rem[k].second;
        if (out[c] < sizes[c]) {
            ++out[c];
            ++used;
        }
    }
    return out;
}

}  // namespace

Split split(const Dataset& data, const SplitSpec& spec) {
    data.validate();
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw InputError("split: test_fraction must lie in (0, 1)");
    }
    if (!(spec.calibration_fraction >= 0.0 && spec.calibration_fraction < 1.0)) {
        throw InputError("split: calibration_fraction must lie in [0, 1)");
    }
    std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(data.num_classes));
    for (std::size_t i = 0; i < data.y.size(); ++i) {
        by_class[static_cast<std::size_t>(data.y[i])].push_back(static_cast<Eigen::Index>(i));
    }
    std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(spec.replicate_index)));
    for (auto& rows : by_class) std::shuffle(rows.begin(), rows.end(), rng);

    std::vector<std::size_t> sizes;
    for (const auto& rows : by_class) sizes.push_back(rows.size());
    const std::vector<std::size_t> n_test = allocate(sizes, spec.test_fraction);
    std::vector<std::size_t> remainder(sizes.size());
    for (std::size_t c = 0; c < sizes.size(); ++c) remainder[c] = sizes[c] - n_test[c];
    const std::vector<std::size_t> n_cal = allocate(remainder, spec.calibration_fraction);

    Split out;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        const auto& rows = by_class[c];
        std::size_t k = 0;
        for (; k < n_test[c]; ++k) out.test_rows.push_back(rows[k]);
        for (std::size_t j = 0; j < n_cal[c]; ++j, ++k) out.calibration_rows.push_back(rows[k]);
        std::size_t train_count = 0;
        for (; k < rows.size(); ++k, ++train_count) out.train_rows.push_back(rows[k]);
        if (!rows.empty() && train_count == 0) {
            throw InputError("split: class " + std::to_string(c) + " is absent from the training part");
        }
    }
    for (auto* rows : {&out.train_rows, &out.calibration_rows, &out.test_rows}) {
        std::sort(rows->begin(), rows->end());
    }
    if (out.test_rows.empty()) throw InputError("split: empty test set");
    out.train = data.subset(out.train_rows);
    out.calibration = data.subset(out.calibration_rows);
    out.test = data.subset(out.test_rows);
    return out;
}

ProbabilityFunction ProbabilityFunction::sinusoid() {
    return {"sinusoid", [](double x) { return 0.5 + 0.4 * std::sin(1.5 * x); }, -3.0, 3.0};
}

ProbabilityFunction ProbabilityFunction::step() {
    return {"step", [](double x) { return x < 0.0 ? 0.05 : 0.95; }, -3.0, 3.0};
}

ProbabilityFunction ProbabilityFunction::constant(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("constant probability must lie in [0, 1]");
    return {"constant", [p](double) { return p; }, -3.0, 3.0};
}

ProbabilityFunction ProbabilityFunction::by_name(const std::string& name) {
    if (name == "sinusoid") return sinusoid();
    if (name == "step") return step();
    throw InputError("unknown probability function '" + name + "' (expected sinusoid or step)");
}

SyntheticDataset synth_bernoulli_1d(int n, const ProbabilityFunction& fp, std::uint64_t seed) {
    if (n < 0) throw InputError("synth_bernoulli_1d: negative size");
    SyntheticDataset out;
    out.data.name = "synth_" + fp.name;
    out.data.num_classes = 2;
    out.data.class_names = {"0", "1"};
    out.data.X.resize(n, 1);
    out.true_prob.resize(n);
    out.data.y.resize(static_cast<std::size_t>(n));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(fp.lo, fp.hi);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const double x = ux(rng);
        const double p = fp.fn(x);
        out.data.X(i, 0) = x;
        out.true_prob(i) = p;
        out.data.y[static_cast<std::size_t>(i)] = u01(rng) < p ? 1 : 0;
    }
    return out;
}

}  // namespace gpd
