#include "sdistill/teachers/registry.hpp"

#include <fstream>

#include "sdistill/neural/checkpoint.hpp"
#include "sdistill/teachers/ngram.hpp"
#include "sdistill/teachers/recurrent.hpp"
#include "sdistill/teachers/unigram.hpp"
#include "sdistill/util/error.hpp"

namespace sdistill::teachers {

Direction AnyTeacher::direction() const {
  return syntactic_ ? syntactic_->direction() : plain_->direction();
}

std::size_t AnyTeacher::vocab_size() const {
  return syntactic_ ? syntactic_->vocab_size() : plain_->vocab_size();
}

std::shared_ptr<const Teacher> AnyTeacher::bind(const corpus::PhraseTree* tree) const {
  if (!syntactic_) return plain_;
  if (!tree) throw UsageError("a syntactic teacher needs the sentence trees");
  struct Bound {
    std::shared_ptr<const SyntacticLM> model;
    ForcedTreeTeacher teacher;
  };
  auto b = std::make_shared<Bound>(Bound{syntactic_, ForcedTreeTeacher(*syntactic_, *tree)});
  return std::shared_ptr<const Teacher>(b, &b->teacher);
}

AnyTeacher AnyTeacher::load(const std::string& path, const corpus::Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string first;
  std::getline(in, first);
  in.close();
  AnyTeacher out(std::shared_ptr<const Teacher>{});
  if (first.rfind("# sdistill-unigram", 0) == 0) {
    out = AnyTeacher(std::make_shared<UnigramModel>(UnigramModel::load(path, vocab)));
    out.class_ = "unigram";
  } else if (first.rfind("# sdistill-ngram", 0) == 0) {
    out = AnyTeacher(std::make_shared<NGramModel>(NGramModel::load(path, vocab)));
    out.class_ = "ngram";
  } else {
    const auto header = neural::read_checkpoint_header(path);
    if (header.model_class == "recurrent") {
      out = AnyTeacher(std::make_shared<RecurrentLM>(RecurrentLM::load(path, vocab.size(), vocab.hash())));
    } else if (header.model_class == "syntactic") {
      out = AnyTeacher(std::make_shared<SyntacticLM>(SyntacticLM::load(path, vocab.size(), vocab.hash())));
    } else {
      throw DataError(path + ": checkpoint class '" + header.model_class + "' is not a teacher");
    }
    out.class_ = header.model_class;
  }
  return out;
}

}  // namespace sdistill::teachers
