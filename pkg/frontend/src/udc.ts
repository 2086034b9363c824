// Client-side validation of the user-defined-constraints document:
//   {"attr": {"distribution": {"F": 0.9, "M": 0.1}}}  or  {"attr": {"range": [60, 80]}}

export interface UdcValidation {
  ok: boolean;
  errors: string[];
  value: Record<string, unknown> | null;
}

export function validateUdc(text: string): UdcValidation {
  const trimmed = text.trim();
  if (trimmed === "") {
    return { ok: true, errors: [], value: null };
  }
  let parsed: unknown;
  try {
    parsed = JSON.parse(trimmed);
  } catch (error) {
    return { ok: false, errors: [`not valid JSON: ${(error as Error).message}`], value: null };
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    return { ok: false, errors: ["must be an object keyed by attribute name"], value: null };
  }
  const errors: string[] = [];
  for (const [attribute, constraint] of Object.entries(parsed as Record<string, unknown>)) {
    if (typeof constraint !== "object" || constraint === null || Array.isArray(constraint)) {
      errors.push(`${attribute}: constraint must be an object`);
      continue;
    }
    const keys = Object.keys(constraint);
    const hasDistribution = keys.includes("distribution");
    const hasRange = keys.includes("range");
    if (hasDistribution === hasRange) {
      errors.push(`${attribute}: needs exactly one of "distribution" or "range"`);
      continue;
    }
    if (hasDistribution) {
      const distribution = (constraint as Record<string, unknown>).distribution;
      if (typeof distribution !== "object" || distribution === null || Array.isArray(distribution)) {
        errors.push(`${attribute}: distribution must map category to probability`);
        continue;
      }
      let total = 0;
      let bad = false;
      for (const [category, probability] of Object.entries(distribution as Record<string, unknown>)) {
        if (typeof probability !== "number" || probability < 0) {
          errors.push(`${attribute}.${category}: probability must be a non-negative number`);
          bad = true;
          break;
        }
        total += probability;
      }
      if (!bad && Math.abs(total - 1) > 1e-9) {
        errors.push(`${attribute}: probabilities must sum to 1 (got ${total})`);
      }
    } else {
      const range = (constraint as Record<string, unknown>).range;
      if (!Array.isArray(range) || range.length !== 2 ||
          typeof range[0] !== "number" || typeof range[1] !== "number") {
        errors.push(`${attribute}: range must be [low, high]`);
      } else if (range[0] > range[1]) {
        errors.push(`${attribute}: range low must be <= high`);
      }
    }
  }
  return {
    ok: errors.length === 0,
    errors,
    value: errors.length === 0 ? (parsed as Record<string, unknown>) : null,
  };
}
