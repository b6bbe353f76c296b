#pragma once

#include <memory>
#include <string>

#include "sdistill/corpus/tree.hpp"
#include "sdistill/corpus/vocab.hpp"
#include "sdistill/teachers/syntactic.hpp"
#include "sdistill/teachers/teacher.hpp"

namespace sdistill::teachers {

// A trained teacher of any class. Syntactic models need the sentence's tree to
// act as a next-word teacher; the others ignore it.
class AnyTeacher {
 public:
  explicit AnyTeacher(std::shared_ptr<const Teacher> plain) : plain_(std::move(plain)) {}
  explicit AnyTeacher(std::shared_ptr<const SyntacticLM> syntactic)
      : syntactic_(std::move(syntactic)) {}

  bool needs_tree() const { return syntactic_ != nullptr; }
  Direction direction() const;
  std::size_t vocab_size() const;
  const std::string& model_class() const { return class_; }
  // Teacher for one sentence; `tree` is required for syntactic models.
  std::shared_ptr<const Teacher> bind(const corpus::PhraseTree* tree) const;

  const Teacher* plain() const { return plain_.get(); }
  const SyntacticLM* syntactic() const { return syntactic_.get(); }

  // Recognises unigram and n-gram TSV files and recurrent/syntactic checkpoints.
  static AnyTeacher load(const std::string& path, const corpus::Vocabulary& vocab);

 private:
  std::shared_ptr<const Teacher> plain_;
  std::shared_ptr<const SyntacticLM> syntactic_;
  std::string class_;
};

}  // namespace sdistill::teachers
