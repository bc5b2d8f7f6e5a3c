#include "bcop/data/image.hpp"

#include <fstream>
#include <iterator>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "bcop/error.hpp"

namespace bcop {
namespace {

cv::Mat to_mat(const Image& image) {
  const int type = image.channels == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat rgb(image.height, image.width, type, const_cast<std::uint8_t*>(image.pixels.data()));
  return rgb.clone();
}

Image from_mat(const cv::Mat& mat) {
  Image out(mat.cols, mat.rows, mat.channels());
  const cv::Mat contiguous = mat.isContinuous() ? mat : mat.clone();
  std::copy(contiguous.datastart, contiguous.dataend, out.pixels.begin());
  return out;
}

}  // namespace

Image resize_to_input(const Image& image) {
  if (image.width == kImageExtent && image.height == kImageExtent) return image;
  cv::Mat resized;
  cv::resize(to_mat(image), resized, cv::Size(kImageExtent, kImageExtent), 0, 0, cv::INTER_AREA);
  return from_mat(resized);
}

Image load_image(const std::filesystem::path& path) {
  if (path.extension() == ".rgb") {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Image image(kImageExtent, kImageExtent, 3);
    if (bytes.size() != image.pixels.size()) {
      fail(ErrorCode::kIo, path.string() + ": raw dump must hold exactly 32*32*3 bytes");
    }
    image.pixels = std::move(bytes);
    return image;
  }
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) fail(ErrorCode::kIo, "cannot decode image " + path.string());
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  return resize_to_input(from_mat(rgb));
}

void save_image(const Image& image, const std::filesystem::path& path) {
  cv::Mat out = to_mat(image);
  if (image.channels == 3) cv::cvtColor(out, out, cv::COLOR_RGB2BGR);
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), out);
  } catch (const cv::Exception& e) {
    fail(ErrorCode::kIo, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) fail(ErrorCode::kIo, "cannot write " + path.string());
}

}  // namespace bcop
