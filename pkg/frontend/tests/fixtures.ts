import type { ModelDocument } from "../src/types.js";

/** Household food-insecurity network (before the income → benefits edge). */
export const FOOD_INSECURITY_DOC: ModelDocument = {
  kind: "dag",
  version: 1,
  metadata: {},
  payload: {
    nodes: [
      { id: "B", label: "Government benefits", symbol: "B" },
      { id: "F", label: "Food insecurity", symbol: "F" },
      { id: "H", label: "Long-term health outcomes", symbol: "H" },
      { id: "I", label: "Disposable Income", symbol: "I" },
    ],
    edges: [
      ["B", "F"],
      ["F", "H"],
      ["I", "F"],
    ],
  },
};

/** Same network after the expert adds income → benefits. */
export const FOOD_INSECURITY_REVISED_DOC: ModelDocument = {
  kind: "dag",
  version: 1,
  metadata: {},
  payload: {
    nodes: [
      { id: "B", label: "Government benefits", symbol: "B" },
      { id: "F", label: "Food insecurity", symbol: "F" },
      { id: "H", label: "Long-term health outcomes", symbol: "H" },
      { id: "I", label: "Disposable Income", symbol: "I" },
    ],
    edges: [
      ["B", "F"],
      ["F", "H"],
      ["I", "B"],
      ["I", "F"],
    ],
  },
};
