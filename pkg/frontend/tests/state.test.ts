import { describe, expect, it } from "vitest";

import { DEFAULT_STATE, parseState, stateToQuery } from "../src/state.js";

describe("view state in the URL", () => {
  it("parses an empty query into defaults", () => {
    expect(parseState("")).toEqual(DEFAULT_STATE);
  });

  it("round-trips filters, page, and selection", () => {
    const state = {
      flag: "repeat_defacement" as const,
      status: null,
      verdict: "false_positive" as const,
      activeOnly: false,
      page: 3,
      selected: "9f8e1c2d3a4b5c6d",
    };
    expect(parseState(stateToQuery(state))).toEqual(state);
  });

  it("drops unknown filter values instead of passing them to the API", () => {
    const state = parseState("?flag=nonsense&status=defaced");
    expect(state.flag).toBeNull();
    expect(state.status).toBe("defaced");
  });

  it("rejects bad page numbers", () => {
    expect(parseState("?page=0").page).toBe(1);
    expect(parseState("?page=x").page).toBe(1);
  });

  it("serializes the default state to an empty query", () => {
    expect(stateToQuery(DEFAULT_STATE)).toBe("");
  });
});
