#include "dps/image_io.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

#include "dps/errors.hpp"

namespace dps {

ImageTensor read_image(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) {
        throw ConfigError("cannot decode image file: " + path.string());
    }
    if (raw.depth() != CV_8U) {
        throw ConfigError("image is not 8-bit: " + path.string());
    }
    if (raw.channels() != 1 && raw.channels() != 3) {
        throw ConfigError("image must be grayscale or RGB: " + path.string());
    }

    TensorShape shape{raw.rows, raw.cols, raw.channels()};
    Eigen::VectorXd values(shape.size());
    Eigen::Index idx = 0;
    for (int y = 0; y < raw.rows; ++y) {
        const unsigned char* row = raw.ptr<unsigned char>(y);
        for (int x = 0; x < raw.cols; ++x) {
            if (raw.channels() == 1) {
                values[idx++] = row[x] / 255.0;
            } else {
                // OpenCV stores BGR
                values[idx++] = row[3 * x + 2] / 255.0;
                values[idx++] = row[3 * x + 1] / 255.0;
                values[idx++] = row[3 * x + 0] / 255.0;
            }
        }
    }
    return ImageTensor(shape, std::move(values));
}

void write_image(const ImageTensor& image, const std::filesystem::path& path) {
    const TensorShape& s = image.shape();
    if (s.channels != 1 && s.channels != 3) {
        throw ConfigError("only grayscale or RGB images can be written");
    }
    cv::Mat out(s.height, s.width, s.channels == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < s.height; ++y) {
        unsigned char* row = out.ptr<unsigned char>(y);
        for (int x = 0; x < s.width; ++x) {
            for (int c = 0; c < s.channels; ++c) {
                double v = std::clamp(image.at(y, x, c), 0.0, 1.0);
                int byte = static_cast<int>(std::lround(v * 255.0));
                int dst = s.channels == 1 ? x : 3 * x + (2 - c);  // RGB -> BGR
                row[dst] = static_cast<unsigned char>(byte);
            }
        }
    }
    if (!cv::imwrite(path.string(), out)) {
        throw ConfigError("cannot write image file: " + path.string());
    }
}

}  // namespace dps
