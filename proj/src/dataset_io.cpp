// HDF5 reader/writer for the clip dataset layout.

#include <hdf5.h>

#include <filesystem>
#include <string>
#include <utility>

#include "mavact/datamodel.hpp"
#include "mavact/errors.hpp"

namespace mavact {
namespace {

/// Owns one HDF5 identifier and releases it with the matching close call.
class H5Handle {
public:
    using Closer = herr_t (*)(hid_t);
    H5Handle(hid_t id, Closer close) : id_(id), close_(close) {}
    H5Handle(const H5Handle&) = delete;
    H5Handle& operator=(const H5Handle&) = delete;
    ~H5Handle() {
        if (id_ >= 0) close_(id_);
    }
    hid_t get() const { return id_; }
    bool valid() const { return id_ >= 0; }

private:
    hid_t id_;
    Closer close_;
};

void silence_hdf5() {
    static const bool once = [] {
        H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr);
        return true;
    }();
    (void)once;
}

void check(herr_t status, const std::string& what) {
    if (status < 0) throw IoError("hdf5: " + what);
}

void write_string_attr(hid_t loc, const char* name, const std::string& value) {
    H5Handle type(H5Tcopy(H5T_C_S1), H5Tclose);
    check(H5Tset_size(type.get(), value.size()), "set string size");
    check(H5Tset_strpad(type.get(), H5T_STR_NULLTERM), "set string pad");
    H5Handle space(H5Screate(H5S_SCALAR), H5Sclose);
    H5Handle attr(H5Acreate2(loc, name, type.get(), space.get(), H5P_DEFAULT, H5P_DEFAULT),
                  H5Aclose);
    if (!attr.valid()) throw IoError(std::string("hdf5: create attribute ") + name);
    check(H5Awrite(attr.get(), type.get(), value.data()), "write attribute");
}

std::string read_string_attr(hid_t loc, const char* name) {
    H5Handle attr(H5Aopen(loc, name, H5P_DEFAULT), H5Aclose);
    if (!attr.valid()) throw IoError(std::string("hdf5: missing attribute ") + name);
    H5Handle type(H5Aget_type(attr.get()), H5Tclose);
    if (H5Tget_class(type.get()) != H5T_STRING) {
        throw IoError(std::string("hdf5: attribute is not a string: ") + name);
    }
    if (H5Tis_variable_str(type.get()) > 0) {
        char* buf = nullptr;
        H5Handle mem(H5Tcopy(H5T_C_S1), H5Tclose);
        H5Tset_size(mem.get(), H5T_VARIABLE);
        check(H5Aread(attr.get(), mem.get(), &buf), "read attribute");
        std::string out(buf ? buf : "");
        H5free_memory(buf);
        return out;
    }
    const std::size_t size = H5Tget_size(type.get());
    std::string out(size, '\0');
    check(H5Aread(attr.get(), type.get(), out.data()), "read attribute");
    out.resize(out.find('\0') == std::string::npos ? size : out.find('\0'));
    return out;
}

}  // namespace

void write_dataset(const std::string& path, const ClipDataset& data) {
    silence_hdf5();
    if (data.pixels.size() != data.size() * data.shape.voxels()) {
        throw std::invalid_argument("dataset pixel buffer inconsistent with label count");
    }
    H5Handle file(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, H5P_DEFAULT, H5P_DEFAULT), H5Fclose);
    if (!file.valid()) throw IoError("cannot create dataset file: " + path);

    const hsize_t n = data.size();
    const hsize_t clip_dims[5] = {n, static_cast<hsize_t>(data.shape.frames),
                                  static_cast<hsize_t>(data.shape.height),
                                  static_cast<hsize_t>(data.shape.width), 3};
    {
        H5Handle space(H5Screate_simple(5, clip_dims, nullptr), H5Sclose);
        H5Handle ds(H5Dcreate2(file.get(), "/clips", H5T_STD_U8LE, space.get(), H5P_DEFAULT,
                               H5P_DEFAULT, H5P_DEFAULT),
                    H5Dclose);
        if (!ds.valid()) throw IoError("hdf5: create /clips in " + path);
        check(H5Dwrite(ds.get(), H5T_NATIVE_UINT8, H5S_ALL, H5S_ALL, H5P_DEFAULT,
                       data.pixels.data()),
              "write /clips");
    }
    {
        std::vector<std::uint8_t> codes;
        codes.reserve(n);
        for (auto l : data.labels) codes.push_back(wire_code(l));
        const hsize_t dims[1] = {n};
        H5Handle space(H5Screate_simple(1, dims, nullptr), H5Sclose);
        H5Handle ds(H5Dcreate2(file.get(), "/labels", H5T_STD_U8LE, space.get(), H5P_DEFAULT,
                               H5P_DEFAULT, H5P_DEFAULT),
                    H5Dclose);
        if (!ds.valid()) throw IoError("hdf5: create /labels in " + path);
        check(H5Dwrite(ds.get(), H5T_NATIVE_UINT8, H5S_ALL, H5S_ALL, H5P_DEFAULT, codes.data()),
              "write /labels");
    }
    write_string_attr(file.get(), "scale", std::string(to_string(data.scale)));
    {
        H5Handle space(H5Screate(H5S_SCALAR), H5Sclose);
        H5Handle attr(H5Acreate2(file.get(), "fps", H5T_STD_I32LE, space.get(), H5P_DEFAULT,
                                 H5P_DEFAULT),
                      H5Aclose);
        if (!attr.valid()) throw IoError("hdf5: create attribute fps");
        const int fps = data.fps;
        check(H5Awrite(attr.get(), H5T_NATIVE_INT, &fps), "write fps");
    }
}

ClipDataset read_dataset(const std::string& path) {
    silence_hdf5();
    if (!std::filesystem::exists(path)) throw IoError("dataset file not found: " + path);
    H5Handle file(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), H5Fclose);
    if (!file.valid()) throw IoError("cannot open dataset file: " + path);

    ClipDataset out;
    hsize_t n = 0;
    {
        H5Handle ds(H5Dopen2(file.get(), "/clips", H5P_DEFAULT), H5Dclose);
        if (!ds.valid()) throw IoError("hdf5: missing /clips in " + path);
        H5Handle space(H5Dget_space(ds.get()), H5Sclose);
        if (H5Sget_simple_extent_ndims(space.get()) != 5) {
            throw IoError("hdf5: /clips must be 5-dimensional");
        }
        hsize_t dims[5];
        H5Sget_simple_extent_dims(space.get(), dims, nullptr);
        if (dims[4] != 3) throw IoError("hdf5: /clips last dimension must be 3");
        n = dims[0];
        out.shape = ClipShape{static_cast<int>(dims[1]), static_cast<int>(dims[2]),
                              static_cast<int>(dims[3])};
        out.pixels.resize(n * out.shape.voxels());
        if (n > 0) {
            check(H5Dread(ds.get(), H5T_NATIVE_UINT8, H5S_ALL, H5S_ALL, H5P_DEFAULT,
                          out.pixels.data()),
                  "read /clips");
        }
    }
    {
        H5Handle ds(H5Dopen2(file.get(), "/labels", H5P_DEFAULT), H5Dclose);
        if (!ds.valid()) throw IoError("hdf5: missing /labels in " + path);
        H5Handle space(H5Dget_space(ds.get()), H5Sclose);
        hsize_t dims[1] = {0};
        if (H5Sget_simple_extent_ndims(space.get()) != 1) {
            throw IoError("hdf5: /labels must be 1-dimensional");
        }
        H5Sget_simple_extent_dims(space.get(), dims, nullptr);
        if (dims[0] != n) throw IoError("hdf5: /labels length differs from /clips");
        std::vector<std::uint8_t> codes(n);
        if (n > 0) {
            check(H5Dread(ds.get(), H5T_NATIVE_UINT8, H5S_ALL, H5S_ALL, H5P_DEFAULT,
                          codes.data()),
                  "read /labels");
        }
        out.labels.reserve(n);
        try {
            for (auto c : codes) out.labels.push_back(action_from_code(c));
        } catch (const std::invalid_argument& e) {
            throw IoError(std::string("hdf5: ") + e.what());
        }
    }
    try {
        out.scale = scale_from_string(read_string_attr(file.get(), "scale"));
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("hdf5: ") + e.what());
    }
    {
        H5Handle attr(H5Aopen(file.get(), "fps", H5P_DEFAULT), H5Aclose);
        if (!attr.valid()) throw IoError("hdf5: missing attribute fps");
        int fps = 0;
        check(H5Aread(attr.get(), H5T_NATIVE_INT, &fps), "read fps");
        out.fps = fps;
    }
    return out;
}

}  // namespace mavact
