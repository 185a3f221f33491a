// Runs one learner through a whole session in-process: every answer is right
// with probability P. Prints each state change with its score and the first
// rule that fired.
//
//   scripted_session data/sample_kb.json data/questionnaire.json [P] [seed]

#include <simtutor/simtutor.hpp>

#include <cstdlib>
#include <iostream>
#include <memory>
#include <random>

int main(int argc, char** argv) {
  using namespace simtutor;
  if (argc < 3) {
    std::cerr << "usage: " << argv[0] << " KB_JSON QUESTIONNAIRE_JSON [P_CORRECT] [SEED]\n";
    return 2;
  }
  const double p = argc > 3 ? std::atof(argv[3]) : 0.7;
  const std::uint64_t seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : 7;

  auto kb = std::make_shared<const KnowledgeBase>(load_knowledge_base_file(argv[1]));
  LearnerModel learner;
  learner.learner_id = "demo";
  learner.seed = seed;
  Session session(kb, PedagogyConfig{}, load_questionnaire_file(argv[2]), learner);

  std::mt19937_64 gen(seed);
  std::bernoulli_distribution right(p);
  while (session.state() != StateKind::Completed) {
    switch (session.state()) {
      case StateKind::AwaitQuestionnaire: {
        std::map<std::string, int> responses;
        for (const auto& item : session.questionnaire().items) responses[item.id] = 1 + gen() % 5;
        session.submit_questionnaire(responses);
        break;
      }
      case StateKind::SelectingConcept:
      case StateKind::Presenting:
        session.advance();
        break;
      default: {
        std::map<std::string, int> answers;
        for (const auto& id : session.plan()->question_ids) {
          const auto& q = kb->question_at(id);
          answers[id] = right(gen) ? q.correct_index : (q.correct_index + 1) % static_cast<int>(q.choices.size());
        }
        session.submit_answers(answers);
      }
    }
  }

  for (const auto& e : session.transcript()) {
    std::cout << e.kind;
    if (!e.concept_id.empty()) std::cout << "  " << e.concept_id;
    if (e.score) std::cout << "  score=" << *e.score;
    const auto traces = e.detail.value("traces", json::array());
    if (!traces.empty()) std::cout << "  [" << traces[0]["rule"].get<std::string>() << "]";
    std::cout << "\n";
  }
  std::cout << "\n" << session.step().dump(2) << "\n";
}
