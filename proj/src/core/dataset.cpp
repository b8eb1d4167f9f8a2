#include "confdebate/core/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "confdebate/core/errors.hpp"
#include "confdebate/core/parse.hpp"

namespace confdebate::core {

std::vector<QuestionRecord> parse_dataset(std::string_view jsonl) {
    std::vector<QuestionRecord> out;
    std::set<std::string> seen;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const std::string where = "dataset line " + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::Format, where + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("question") || !j.contains("answer")) {
            throw Error(ErrorCode::Format, where + ": expected keys id, question, answer");
        }
        QuestionRecord q;
        q.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
        q.question = j["question"].get<std::string>();
        q.gold_answer = j["answer"].is_string() ? j["answer"].get<std::string>() : j["answer"].dump();
        if (j.contains("choices") && !j["choices"].is_null()) {
            q.choices = j["choices"].get<std::vector<std::string>>();
        }
        if (j.contains("kind") && !j["kind"].is_null()) {
            q.answer_kind = answer_kind_from_string(j["kind"].get<std::string>());
        } else if (!q.choices.empty()) {
            q.answer_kind = AnswerKind::multiple_choice;
        }
        if (q.answer_kind == AnswerKind::multiple_choice && q.choices.empty()) {
            throw Error(ErrorCode::Format, where + ": multiple_choice record without choices");
        }
        if (!seen.insert(q.id).second) throw Error(ErrorCode::Format, where + ": duplicate id '" + q.id + "'");
        out.push_back(std::move(q));
    }
    return out;
}

std::vector<QuestionRecord> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open dataset " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str());
}

}  // namespace confdebate::core
