// Copyright 2026 The mmrag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "mmrag/error.hpp"
#include "mmrag/hash.hpp"
#include "mmrag/openai_backend.hpp"

namespace mmrag {

std::string encode_image_data_url(const std::filesystem::path& path, int long_side) {
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (img.empty()) throw Error(ErrorCode::MissingFile, "cannot read image " + path.string());
  const int current = std::max(img.cols, img.rows);
  if (long_side > 0 && current > long_side) {
    const double scale = static_cast<double>(long_side) / current;
    cv::Mat resized;
    cv::resize(img, resized,
               cv::Size(std::max(1, static_cast<int>(std::lround(img.cols * scale))),
                        std::max(1, static_cast<int>(std::lround(img.rows * scale)))),
               0, 0, cv::INTER_AREA);
    img = resized;
  }
  std::vector<unsigned char> buf;
  cv::imencode(".jpg", img, buf, {cv::IMWRITE_JPEG_QUALITY, 90});
  return "data:image/jpeg;base64," + base64_encode(std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
}

ImageLoader make_corpus_image_loader(CorpusHandle corpus, ResolutionBudget budget) {
  return [corpus = std::move(corpus), budget](const ImageRef& ref) {
    return encode_image_data_url(corpus->page(ref.page_id).image_path, budget.long_side(ref.resolution));
  };
}

}  // namespace mmrag
