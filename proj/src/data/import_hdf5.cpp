#include <hdf5.h>

#include <algorithm>
#include <cstring>
#include <memory>
#include <optional>

#include "osb/core/error.hpp"
#include "osb/data/io.hpp"

namespace osb::data {

namespace {

// Owns an HDF5 identifier and closes it with the matching H5*close call.
class H5Handle {
 public:
  H5Handle(hid_t id, herr_t (*closer)(hid_t)) : id_(id), closer_(closer) {}
  ~H5Handle() {
    if (id_ >= 0) closer_(id_);
  }
  H5Handle(const H5Handle&) = delete;
  H5Handle& operator=(const H5Handle&) = delete;
  hid_t get() const { return id_; }
  bool valid() const { return id_ >= 0; }

 private:
  hid_t id_;
  herr_t (*closer_)(hid_t);
};

struct Array {
  std::vector<double> values;
  std::vector<hsize_t> shape;
  hsize_t rows() const { return shape.empty() ? 0 : shape[0]; }
  hsize_t cols() const { return shape.size() > 1 ? shape[1] : 1; }
};

std::optional<Array> read_dataset(hid_t file, const char* name, const std::string& path) {
  if (H5Lexists(file, name, H5P_DEFAULT) <= 0) return std::nullopt;
  H5Handle ds(H5Dopen2(file, name, H5P_DEFAULT), H5Dclose);
  if (!ds.valid()) throw ValidationError("cannot open dataset '" + std::string(name) + "' in " + path);
  H5Handle space(H5Dget_space(ds.get()), H5Sclose);
  const int rank = H5Sget_simple_extent_ndims(space.get());
  if (rank < 1 || rank > 2) {
    throw ValidationError("dataset '" + std::string(name) + "' must be 1-D or 2-D in " + path);
  }
  Array a;
  a.shape.resize(static_cast<std::size_t>(rank));
  H5Sget_simple_extent_dims(space.get(), a.shape.data(), nullptr);
  a.values.resize(static_cast<std::size_t>(a.rows() * a.cols()));
  // Boolean columns written by h5py are int8 enums; read them through the base type.
  H5Handle type(H5Dget_type(ds.get()), H5Tclose);
  hid_t memtype = H5T_NATIVE_DOUBLE;
  std::vector<std::int64_t> ints;
  const bool integral = H5Tget_class(type.get()) == H5T_ENUM || H5Tget_class(type.get()) == H5T_INTEGER;
  herr_t status;
  if (integral) {
    ints.resize(a.values.size());
    memtype = H5T_NATIVE_INT64;
    if (H5Tget_class(type.get()) == H5T_ENUM) {
      H5Handle base(H5Tget_super(type.get()), H5Tclose);
      H5Handle native(H5Tget_native_type(base.get(), H5T_DIR_ASCEND), H5Tclose);
      std::vector<unsigned char> raw(a.values.size() * H5Tget_size(native.get()));
      status = H5Dread(ds.get(), native.get(), H5S_ALL, H5S_ALL, H5P_DEFAULT, raw.data());
      if (status >= 0) {
        const std::size_t width = H5Tget_size(native.get());
        const bool is_signed = H5Tget_sign(native.get()) == H5T_SGN_2;
        for (std::size_t i = 0; i < ints.size(); ++i) {
          std::int64_t v = 0;
          if (width == 1) {
            v = is_signed ? static_cast<std::int8_t>(raw[i]) : raw[i];
          } else {
            std::memcpy(&v, raw.data() + i * width, std::min<std::size_t>(width, 8));
          }
          ints[i] = v;
        }
      }
    } else {
      status = H5Dread(ds.get(), memtype, H5S_ALL, H5S_ALL, H5P_DEFAULT, ints.data());
    }
    for (std::size_t i = 0; i < ints.size(); ++i) a.values[i] = static_cast<double>(ints[i]);
  } else {
    status = H5Dread(ds.get(), memtype, H5S_ALL, H5S_ALL, H5P_DEFAULT, a.values.data());
  }
  if (status < 0) throw ValidationError("failed to read dataset '" + std::string(name) + "' in " + path);
  return a;
}

Array require(hid_t file, const char* name, const std::string& path) {
  auto a = read_dataset(file, name, path);
  if (!a) throw ValidationError("missing key '" + std::string(name) + "' in " + path);
  return *a;
}

}  // namespace

TrajectoryDataset import_external(const std::filesystem::path& path, const std::string& env_name) {
  H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
  const std::string p = path.string();
  if (!std::filesystem::exists(path)) throw ValidationError("no such file " + p);
  H5Handle file(H5Fopen(p.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
  if (!file.valid()) throw ValidationError("cannot open " + p + " as HDF5 (corrupt or truncated?)");

  const Array obs = require(file.get(), "observations", p);
  const Array act = require(file.get(), "actions", p);
  const Array rew = require(file.get(), "rewards", p);
  const Array term = require(file.get(), "terminals", p);
  const Array tout = require(file.get(), "timeouts", p);
  const auto next = read_dataset(file.get(), "next_observations", p);

  const hsize_t n = obs.rows();
  std::string ragged;
  if (act.rows() != n) ragged += " actions";
  if (rew.rows() != n || rew.cols() != 1) ragged += " rewards";
  if (term.rows() != n || term.cols() != 1) ragged += " terminals";
  if (tout.rows() != n || tout.cols() != 1) ragged += " timeouts";
  if (next && (next->rows() != n || next->cols() != obs.cols())) ragged += " next_observations";
  if (!ragged.empty()) {
    throw ValidationError("ragged arrays in " + p + " (length differs from observations:" + ragged + ")");
  }
  if (n == 0) throw ValidationError("no transitions in " + p);

  TrajectoryDataset data;
  data.source = DataSource::imported;
  data.env_name = env_name;
  data.state_dim = static_cast<int>(obs.cols());
  data.action_dim = static_cast<int>(act.cols());
  const auto sd = obs.cols();
  const auto ad = act.cols();

  hsize_t begin = 0;
  for (hsize_t i = 0; i < n; ++i) {
    const bool terminal = term.values[i] != 0.0;
    const bool boundary = terminal || tout.values[i] != 0.0 || i + 1 == n;
    if (!boundary) continue;
    const auto len = static_cast<Index>(i + 1 - begin);
    Trajectory t;
    t.states.resize(len, data.state_dim);
    t.next_states.resize(len, data.state_dim);
    t.actions.resize(len, data.action_dim);
    t.rewards.resize(len);
    t.dones.resize(static_cast<std::size_t>(len));
    for (Index k = 0; k < len; ++k) {
      const hsize_t row = begin + static_cast<hsize_t>(k);
      const hsize_t next_row = (k + 1 < len) ? row + 1 : row;
      for (hsize_t j = 0; j < sd; ++j) {
        t.states(k, static_cast<Index>(j)) = static_cast<float>(obs.values[row * sd + j]);
        t.next_states(k, static_cast<Index>(j)) =
            static_cast<float>(next ? next->values[row * sd + j] : obs.values[next_row * sd + j]);
      }
      for (hsize_t j = 0; j < ad; ++j) {
        t.actions(k, static_cast<Index>(j)) = static_cast<float>(act.values[row * ad + j]);
      }
      t.rewards[k] = static_cast<float>(rew.values[row]);
      t.dones[static_cast<std::size_t>(k)] = term.values[row] != 0.0 ? 1 : 0;
    }
    data.trajectories.push_back(std::move(t));
    begin = i + 1;
  }
  data.validate();
  return data;
}

}  // namespace osb::data
