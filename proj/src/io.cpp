#include "gyrodiff/io.hpp"

#include "gyrodiff/errors.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gyrodiff::io {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

constexpr const char* kArrayMagic = "gyrodiff-array";
constexpr const char* kCheckpointMagic = "GYRODIFF-CHECKPOINT 1";
constexpr const char* kSplits[] = {"train", "val", "test"};

std::vector<TimeSequence>& split_ref(synth::DatasetSplit& d, const std::string& name) {
    return name == "train" ? d.train : name == "val" ? d.val : d.test;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string sha256_hex(std::span<const unsigned char> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) {
    return sha256_hex(std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

void write_atomic(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path(), ec);
        if (ec) {
            throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
        }
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write " + tmp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw IoError("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

std::string encode_array(const std::vector<TimeSequence>& seqs) {
    const Eigen::Index n_time = seqs.empty() ? 0 : seqs.front().n_time();
    std::string out = std::string(kArrayMagic) + " 1 " + std::to_string(seqs.size()) + " " +
                      std::to_string(n_time) + " 3\n";
    const std::size_t header = out.size();
    out.resize(header + seqs.size() * static_cast<std::size_t>(n_time) * 3 * sizeof(double));
    char* cursor = out.data() + header;
    for (const auto& s : seqs) {
        if (s.n_time() != n_time) {
            throw ShapeError("array files need sequences of one length");
        }
        const std::size_t bytes = static_cast<std::size_t>(s.samples.size()) * sizeof(double);
        std::memcpy(cursor, s.samples.data(), bytes);
        cursor += bytes;
    }
    return out;
}

std::vector<SampleMatrix> decode_array(const std::string& bytes) {
    const auto eol = bytes.find('\n');
    if (eol == std::string::npos) {
        throw FormatError("array file has no header line");
    }
    std::istringstream header(bytes.substr(0, eol));
    std::string magic;
    int version = 0;
    long long n_seq = -1, n_time = -1, channels = -1;
    header >> magic >> version >> n_seq >> n_time >> channels;
    if (!header || magic != kArrayMagic || version != 1 || n_seq < 0 || n_time < 0 ||
        channels != 3) {
        throw FormatError("bad array header '" + bytes.substr(0, eol) + "'");
    }
    const std::size_t expected =
        static_cast<std::size_t>(n_seq) * static_cast<std::size_t>(n_time) * 3 * sizeof(double);
    if (bytes.size() - eol - 1 != expected) {
        throw FormatError("array payload has " + std::to_string(bytes.size() - eol - 1) +
                          " bytes, header implies " + std::to_string(expected));
    }
    std::vector<SampleMatrix> out;
    const char* cursor = bytes.data() + eol + 1;
    for (long long i = 0; i < n_seq; ++i) {
        SampleMatrix m(n_time, 3);
        std::memcpy(m.data(), cursor, static_cast<std::size_t>(m.size()) * sizeof(double));
        cursor += m.size() * static_cast<Eigen::Index>(sizeof(double));
        out.push_back(std::move(m));
    }
    return out;
}

void save_dataset(const fs::path& dir, const DatasetFiles& files) {
    fs::create_directories(dir);
    json meta;
    meta["schema_version"] = 1;
    meta["extra"] = json::parse(files.metadata_json);
    meta["split_ratio"] = {files.data.ratio.train, files.data.ratio.val, files.data.ratio.test};
    for (const char* name : kSplits) {
        auto& seqs = split_ref(const_cast<synth::DatasetSplit&>(files.data), name);
        write_atomic(dir / (std::string(name) + ".f64"), encode_array(seqs));
        std::string labels;
        for (const auto& s : seqs) {
            labels += std::to_string(s.id) + " " + (s.heading ? format_double(*s.heading) : "-") +
                      " " + format_double(s.latitude) + "\n";
        }
        write_atomic(dir / (std::string(name) + "_labels.txt"), labels);
        json info{{"count", seqs.size()}};
        if (!seqs.empty()) {
            info["n_time"] = seqs.front().n_time();
            info["sample_rate_hz"] = seqs.front().sample_rate_hz;
            info["source"] = std::string(to_string(seqs.front().source));
        }
        meta["splits"][name] = info;
    }
    write_atomic(dir / "metadata.json", meta.dump(2) + "\n");
}

DatasetFiles load_dataset(const fs::path& dir) {
    if (!fs::exists(dir / "metadata.json")) {
        throw IoError("no dataset at " + dir.string() + " (metadata.json missing)");
    }
    DatasetFiles files;
    json meta;
    try {
        meta = json::parse(read_file(dir / "metadata.json"));
        if (meta.at("schema_version").get<int>() != 1) {
            throw FormatError("unsupported dataset schema version");
        }
        const auto ratio = meta.at("split_ratio");
        files.data.ratio = {ratio.at(0).get<double>(), ratio.at(1).get<double>(),
                            ratio.at(2).get<double>()};
        files.metadata_json = meta.value("extra", json::object()).dump();
    } catch (const json::exception& e) {
        throw FormatError("malformed " + (dir / "metadata.json").string() + ": " + e.what());
    }
    for (const char* name : kSplits) {
        const auto samples = decode_array(read_file(dir / (std::string(name) + ".f64")));
        std::istringstream labels(read_file(dir / (std::string(name) + "_labels.txt")));
        const json info = meta["splits"][name];
        const double rate = info.value("sample_rate_hz", 3.0);
        const SourceTag source = source_tag_from_string(info.value("source", "synthetic"));
        auto& out = split_ref(files.data, name);
        std::string line;
        std::size_t row = 0;
        while (std::getline(labels, line)) {
            if (line.empty()) {
                continue;
            }
            if (row >= samples.size()) {
                throw FormatError(std::string(name) + "_labels.txt has more rows than the array");
            }
            std::istringstream fields(line);
            std::string id, heading, latitude;
            fields >> id >> heading >> latitude;
            TimeSequence seq;
            try {
                seq.id = std::stoll(id);
                if (heading != "-") {
                    seq.heading = std::stod(heading);
                }
                seq.latitude = std::stod(latitude);
            } catch (const std::exception&) {
                throw FormatError(std::string(name) + "_labels.txt row " + std::to_string(row + 1) +
                                  ": cannot parse '" + line + "'");
            }
            seq.samples = samples[row];
            seq.sample_rate_hz = rate;
            seq.source = source;
            out.push_back(std::move(seq));
            ++row;
        }
        if (row != samples.size()) {
            throw FormatError(std::string(name) + "_labels.txt has " + std::to_string(row) +
                              " rows for " + std::to_string(samples.size()) + " sequences");
        }
    }
    return files;
}

std::string dataset_hash(const fs::path& dir) {
    std::string all;
    for (const char* name : kSplits) {
        all += sha256_file(dir / (std::string(name) + ".f64"));
        all += sha256_file(dir / (std::string(name) + "_labels.txt"));
    }
    return sha256_hex(all);
}

void save_checkpoint(const fs::path& path, const Checkpoint& ckpt) {
    const std::size_t bytes = static_cast<std::size_t>(ckpt.parameters.size()) * sizeof(double);
    const std::string payload(reinterpret_cast<const char*>(ckpt.parameters.data()), bytes);
    json header = json::parse(ckpt.header_json);
    header["kind"] = ckpt.kind;
    header["n_params"] = ckpt.parameters.size();
    header["sha256"] = sha256_hex(payload);
    write_atomic(path, std::string(kCheckpointMagic) + "\n" + header.dump() + "\n" + payload);
}

Checkpoint load_checkpoint(const fs::path& path) {
    if (!fs::exists(path)) {
        throw MissingCheckpoint("checkpoint not found: " + path.string());
    }
    const std::string bytes = read_file(path);
    const auto first = bytes.find('\n');
    if (first == std::string::npos || bytes.compare(0, first, kCheckpointMagic) != 0) {
        throw FormatError(path.string() + " is not a checkpoint");
    }
    const auto second = bytes.find('\n', first + 1);
    if (second == std::string::npos) {
        throw FormatError(path.string() + ": truncated checkpoint header");
    }
    Checkpoint ckpt;
    json header;
    std::size_t n = 0;
    std::string digest;
    try {
        header = json::parse(bytes.substr(first + 1, second - first - 1));
        ckpt.kind = header.at("kind").get<std::string>();
        n = header.at("n_params").get<std::size_t>();
        digest = header.at("sha256").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": bad checkpoint header: " + e.what());
    }
    const std::string payload = bytes.substr(second + 1);
    if (payload.size() != n * sizeof(double)) {
        throw ChecksumError(path.string() + ": parameter block has " +
                            std::to_string(payload.size()) + " bytes, expected " +
                            std::to_string(n * sizeof(double)));
    }
    if (sha256_hex(payload) != digest) {
        throw ChecksumError(path.string() + ": parameter checksum mismatch");
    }
    ckpt.parameters.resize(static_cast<Eigen::Index>(n));
    std::memcpy(ckpt.parameters.data(), payload.data(), payload.size());
    ckpt.header_json = header.dump();
    return ckpt;
}

} // namespace gyrodiff::io
