import { describe, expect, it } from "vitest";

import {
  formatAffordability,
  formatGhg,
  formatKpi,
  formatReliability,
  formatTac,
  formatVolume,
  NOT_APPLICABLE,
} from "../src/format";

describe("fixed-precision KPI formatting", () => {
  it("uses six decimals for reliability", () => {
    expect(formatReliability(0.8828803021009978)).toBe("0.882880");
    expect(formatReliability(1)).toBe("1.000000");
    expect(formatReliability(null)).toBe(NOT_APPLICABLE);
  });

  it("uses two decimals for TAC and three for GHG", () => {
    expect(formatTac(35860790.92514224)).toBe("35860790.93");
    expect(formatGhg(13546.112661763653)).toBe("13546.113");
  });

  it("uses four decimals for affordability and tolerates n/a", () => {
    expect(formatAffordability(0.9712181965454013)).toBe("0.9712");
    expect(formatAffordability(null)).toBe(NOT_APPLICABLE);
  });

  it("formats a whole report", () => {
    const strings = formatKpi({
      slice: "national",
      tac_eur: 100.006,
      ghg_t: 1.0006,
      reliability: 0.5,
      affordability_pct: null,
    });
    expect(strings).toEqual({
      slice: "national",
      tac_eur: "100.01",
      ghg_t: "1.001",
      reliability: "0.500000",
      affordability_pct: NOT_APPLICABLE,
    });
  });
});

describe("volume display", () => {
  it("scales to readable units", () => {
    expect(formatVolume(1_234_567)).toBe("1.23 Mm3");
    expect(formatVolume(12_340)).toBe("12.3k m3");
    expect(formatVolume(420)).toBe("420 m3");
  });
});
