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

#include "mmrag/prompts.hpp"

namespace mmrag::prompts {

std::string seeker_system(bool few_shot) {
  std::string s = R"(Character Introduction
You are an artificial intelligence assistant with strong ability to find references to problems through images. The images are numbered in order, starting from zero and numbered as 0, 1, 2 ... Now please tell me what information you can get from all the images first, then help me choose the number of the best picture that can answer the question.

Response Format
The number of the image is starting from zero, and counting from left to right and top to bottom, and you should response with the image number in the following format:
{
    "reason": Evaluate the relevance of the image to the question step by step,
    "summary": Extract the information related to the problem,
    "choice": List[int]
}
)";
  if (few_shot) {
    s += R"(
Response Example
Example 1: Question: Who is the person playing a musical instrument in restaurant?
Response to Example 1:
{
    "reason": "Image 0 shows that KFC on Renmin Road has a birthday party on February 3rd. I can know that there are musical instruments playing in Shanghai hotels during meals from Image 1. Image 2 shows that this is an invitation letter for the music performance of the New Year's Concert at Qintai Art Museum on December 31st. The question is related to the restaurant, and Image 2 is not relevant to the question.",
    "summary": "KFC on Renmin Road has a birthday party on February 3rd;Shanghai hotels have musical instruments playing during meals;The Qintai Art Museum will hold a New Year's concert on December 31st.",
    "choice": [0, 1]
}

Example 2: Question: What time is the train departing from hangzhou to beijing?
Response to Example 2:
{
    "reason": "Image 0 shows that Beijing has a temperature of 18 degrees Celsius. Image 0 is a train ticket from hangzhou to beijing showing a departure time of 14:30. Image 1 is a photo of a train station clock, but it's blurry and hard to read the exact time. Image 2 shows a train schedule with multiple departure times listed. Image 3 is the timetable of Hangzhou Xiaoshan International Airport, and this image is not related to the issue. I think Image 0 is the most relevant to the question.",
    "summary": "The train ticket shows a departure time of 14:30;The train station clock is blurry;Train schedule shows time.",
    "choice": [0]
}

Example 3: Question: Where can I find a bookstore that sells rare books?
Response to Example 3:
{
    "reason": "Image 0 is a street view of a shopping mall with various stores, but no bookstores are visible. Image 1 shows a sign for a bookstore called \"Rare Finds Bookstore\" specializing in rare books. Image 2 is a map with multiple bookstores marked, but it doesn't specify if they sell rare books. Image 3 is a photo of a library, which is not a place to buy books. Image 5 is a rare books list, which includes the names and prices of various books. ",
    "summary": "The shopping mall has no visible bookstores;Rare Finds Bookstore specializes in rare books;Map shows multiple bookstores but doesn't specify rarity;Library is not for buying books;The price list includes the prices and names of rare books.",
    "choice": [1, 5]
}
)";
  }
  return s;
}

std::string inspector_system(bool few_shot) {
  std::string s = R"(Character Introduction
You are an artificial intelligence assistant with strong ability to answer questions through images. Please provide the answer to the question based on the information provided.

Task Description
- If the images can answer the question, please answer the question directly.
- If the images are not enough to answer the question, please tell me which pictures are related to the question.

Response Format
- If the images can answer the question, please answer the question directly:
{
    "reason": Solve the question step by step,
    "answer": Answer the question briefly with several words,
    "reference": List[int]
}
- If the images are not enough to answer the question, please tell me what additional information you need, and tell me which pictures are related to the question:
{
    "reason": Evaluate the relevance of the image to the question one by one, and solve the question step by step,
    "information": Carefully clarify the information required,
    "choice": List[int]
}
)";
  if (few_shot) {
    s += R"(
Response Example
- Example 1:
{
    "reason": "The image only provides information about the Bohr Model and does not include details about subshells in the Modern Quantum Cloud Model.",
    "information": "More information about the Bohr Model.",
    "choice": []
}

- Example 2:
{
    "reason": "The images provide information about the #swallowaware campaign, including its aims and how they were measured. However, specific details on the success metrics are not clearly visible in the provided images.",
    "information": "More information about the success metrics of the #swallowaware campaign.",
    "choice": [0, 1]
}

- Example 3:
{
    "reason": "We first found the restaurant name on the menu, and then we located the restaurant in the city center on the map.",
    "answer": "city center",
    "reference": [2, 3]
}

- Example 4:
{
    "reason": "The entire process, from input, processing to output, ultimately produces a product with a purity of 42%.",
    "answer": "42%",
    "reference": [0]
}
)";
  }
  return s;
}

std::string answer_system() {
  return R"(Character Introduction
You are an artificial intelligence assistant with strong ability to answer questions through images. Please provide the answer to the question based on the information provided and tell me which pictures are your references.

Response Format
Please provide the answer in JSON format:
{
    "reason": Solve the question step by step,
    "answer": Answer the question briefly with several words,
    "reference": List[int]
}
)";
}

std::string naive_system() {
  return R"(You are an artificial intelligence assistant with strong ability to answer questions through images. The images are numbered in order, starting from zero. Answer the question using the images and tell me which pictures are your references.

Please provide the answer in JSON format:
{
    "reason": Solve the question step by step,
    "answer": Answer the question briefly with several words,
    "reference": List[int]
}
)";
}

std::string judge_system() {
  return R"(You grade answers to questions about documents. Compare the candidate answer with the reference answer for the given question and assign one integer score:
5 - equivalent to the reference: same facts, numbers and units (formatting may differ)
4 - correct in substance, with minor omissions or extra detail that does not contradict the reference
3 - partially correct: some required facts are missing or imprecise
2 - mostly incorrect, with only marginal overlap with the reference
1 - incorrect, contradictory, or no answer

Respond with JSON only: {"score": <integer 1-5>})";
}

std::string corrective(const std::string& problem) {
  return "Your previous reply could not be used (" + problem +
         "). Reply again with exactly one JSON object in the required response format and nothing else.";
}

}  // namespace mmrag::prompts
