// Client-side mirror of the server's 422 rules, so most mistakes are
// caught before the request leaves the browser. The server remains the
// authority; these checks must never be looser than its.

export interface FieldError {
  field: string;
  message: string;
}

export const DIGEST_LENGTHS: Record<string, number> = {
  md5: 32,
  sha1: 40,
  sha256: 64,
};

export const MAX_BRUTE_LENGTH = 6;

const HEX = /^[0-9a-fA-F]+$/;

export interface JobFormValues {
  algorithm: string;
  mode: string;
  hashesText: string;
  nodeIds: string[];
  minLength?: number;
  maxLength?: number;
  wordlists?: string[];
  rules?: string[];
  left?: string;
  right?: string;
}

export function parseHashLines(text: string, algorithm: string): string[] | FieldError {
  const expected = DIGEST_LENGTHS[algorithm];
  const seen = new Set<string>();
  const out: string[] = [];
  const lines = text.split(/\r?\n/);
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    if (line.length !== expected || !HEX.test(line)) {
      return { field: "hashes", message: `line ${i + 1} is not a ${expected}-char hex digest` };
    }
    const normalized = line.toLowerCase();
    if (!seen.has(normalized)) {
      seen.add(normalized);
      out.push(normalized);
    }
  }
  return out;
}

export function validateJobForm(values: JobFormValues): FieldError[] {
  const errors: FieldError[] = [];
  if (!(values.algorithm in DIGEST_LENGTHS)) {
    errors.push({ field: "algorithm", message: "pick an algorithm" });
  }
  if (values.nodeIds.length === 0) {
    errors.push({ field: "node_ids", message: "pick at least one node" });
  }

  const parsed = parseHashLines(values.hashesText, values.algorithm);
  if (Array.isArray(parsed)) {
    if (parsed.length === 0) {
      errors.push({ field: "hashes", message: "enter at least one hash" });
    }
  } else {
    errors.push(parsed);
  }

  switch (values.mode) {
    case "brute": {
      const lo = values.minLength ?? 0;
      const hi = values.maxLength ?? 0;
      if (!(1 <= lo && lo <= hi && hi <= MAX_BRUTE_LENGTH)) {
        errors.push({
          field: "mode",
          message: `lengths must satisfy 1 ≤ min ≤ max ≤ ${MAX_BRUTE_LENGTH}`,
        });
      }
      break;
    }
    case "dictionary":
      if (!values.wordlists || values.wordlists.length === 0) {
        errors.push({ field: "wordlists", message: "pick at least one wordlist" });
      }
      break;
    case "rules":
      if (!values.wordlists || values.wordlists.length === 0) {
        errors.push({ field: "wordlists", message: "pick at least one wordlist" });
      }
      if (!values.rules || values.rules.length === 0) {
        errors.push({ field: "rules", message: "enter at least one rule" });
      }
      break;
    case "combinator":
      if (!values.left || !values.right) {
        errors.push({ field: "wordlists", message: "pick both wordlists" });
      }
      break;
    default:
      errors.push({ field: "mode", message: "pick an attack mode" });
  }
  return errors;
}
