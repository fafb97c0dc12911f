import { Question } from "../src/api.js";

/** A realistic question payload, shaped like GET /api/questions output. */
export const SAMPLE_QUESTION: Question = {
  question_id: "q00007",
  u1: "kb1:act03_1",
  u2: "kb2:act03_1",
  attributes: [
    {
      attr1: "label",
      attr2: "label",
      values1: ["Morgan Reyes"],
      values2: ["Morgan Reyes", "M. Reyes"],
    },
    {
      attr1: "born",
      attr2: "birth_year",
      values1: ["1978"],
      values2: [],
    },
  ],
  neighborhood: {
    side1: ["crew of: Harbor Lights", "crew of: North of Nowhere"],
    side2: ["crew of: Harbor Lights"],
  },
};
