#pragma once

#include <stdexcept>
#include <string>

#include <opencv2/imgcodecs.hpp>

#include "darkforge/image.hpp"

namespace darkforge {

/// Decodes PNG/JPEG to 8-bit RGB; alpha stripped, grayscale promoted.
inline RgbImageU8 load_image(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_COLOR);  // BGR, alpha dropped, gray promoted
    if (m.empty()) throw std::runtime_error("load_image: cannot decode " + path);
    RgbImageU8 out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i) {
        const cv::Vec3b* row = m.ptr<cv::Vec3b>(i);
        for (int j = 0; j < m.cols; ++j) {
            out.at(i, j, 0) = row[j][2];
            out.at(i, j, 1) = row[j][1];
            out.at(i, j, 2) = row[j][0];
        }
    }
    return out;
}

inline void save_png(const std::string& path, const RgbImageU8& img) {
    cv::Mat m(img.height, img.width, CV_8UC3);
    for (int i = 0; i < img.height; ++i) {
        cv::Vec3b* row = m.ptr<cv::Vec3b>(i);
        for (int j = 0; j < img.width; ++j) {
            row[j][2] = img.at(i, j, 0);
            row[j][1] = img.at(i, j, 1);
            row[j][0] = img.at(i, j, 2);
        }
    }
    if (!cv::imwrite(path, m)) throw std::runtime_error("save_png: cannot write " + path);
}

/// Grayscale 0/255 PNG from a binary plane.
inline void save_mask_png(const std::string& path, const Plane& mask) {
    cv::Mat m(mask.height, mask.width, CV_8UC1);
    for (int i = 0; i < mask.height; ++i)
        for (int j = 0; j < mask.width; ++j)
            m.at<std::uint8_t>(i, j) = mask.at(i, j) > 0.5 ? 255 : 0;
    if (!cv::imwrite(path, m)) throw std::runtime_error("save_mask_png: cannot write " + path);
}

}  // namespace darkforge
