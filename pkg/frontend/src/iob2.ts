/**
 * Client-side IOB2 label algebra.
 *
 * Deliberately duplicates the server's rules so invalid annotation states
 * are prevented in the browser rather than reported by a round-trip.
 */

export interface Span {
  start: number; // inclusive word index
  end: number; // exclusive word index
  tag: string;
}

export interface Violation {
  position: number;
  kind: "unknown_label" | "i_at_start" | "i_after_o" | "i_tag_mismatch";
  label: string;
}

function splitLabel(label: string): { role: "O" | "B" | "I" | "?"; tag: string } {
  if (label === "O") return { role: "O", tag: "" };
  if (label.startsWith("B-") && label.length > 2) return { role: "B", tag: label.slice(2) };
  if (label.startsWith("I-") && label.length > 2) return { role: "I", tag: label.slice(2) };
  return { role: "?", tag: "" };
}

/** All IOB2 violations in a label sequence; empty means valid. */
export function validateIob2(labels: readonly string[]): Violation[] {
  const violations: Violation[] = [];
  let prevRole: string = "O";
  let prevTag = "";
  labels.forEach((label, pos) => {
    const { role, tag } = splitLabel(label);
    if (role === "?") {
      violations.push({ position: pos, kind: "unknown_label", label });
      prevRole = "O";
      prevTag = "";
      return;
    }
    if (role === "I") {
      if (pos === 0) violations.push({ position: pos, kind: "i_at_start", label });
      else if (prevRole === "O") violations.push({ position: pos, kind: "i_after_o", label });
      else if (prevTag !== tag) violations.push({ position: pos, kind: "i_tag_mismatch", label });
    }
    prevRole = role;
    prevTag = tag;
  });
  return violations;
}

/** Maximal B-t (I-t)* runs as spans, ordered by start. Requires valid input. */
export function spansFromLabels(labels: readonly string[]): Span[] {
  const violations = validateIob2(labels);
  if (violations.length > 0) {
    const v = violations[0];
    throw new Error(`invalid IOB2 at position ${v.position}: ${v.kind} (${v.label})`);
  }
  const spans: Span[] = [];
  let openStart = -1;
  let openTag = "";
  labels.forEach((label, pos) => {
    const { role, tag } = splitLabel(label);
    if (role === "B") {
      if (openStart >= 0) spans.push({ start: openStart, end: pos, tag: openTag });
      openStart = pos;
      openTag = tag;
    } else if (role === "O") {
      if (openStart >= 0) spans.push({ start: openStart, end: pos, tag: openTag });
      openStart = -1;
    }
  });
  if (openStart >= 0) spans.push({ start: openStart, end: labels.length, tag: openTag });
  return spans;
}

/** Render non-overlapping spans as labels of the given length. */
export function labelsFromSpans(spans: readonly Span[], length: number): string[] {
  const labels = new Array<string>(length).fill("O");
  const occupied = new Array<boolean>(length).fill(false);
  const ordered = [...spans].sort((a, b) => a.start - b.start);
  for (const span of ordered) {
    if (span.start < 0 || span.start >= span.end || span.end > length) {
      throw new Error(`span out of range: [${span.start}, ${span.end}) of ${length}`);
    }
    for (let i = span.start; i < span.end; i++) {
      if (occupied[i]) throw new Error(`span overlap at token ${i}`);
      occupied[i] = true;
    }
    labels[span.start] = `B-${span.tag}`;
    for (let i = span.start + 1; i < span.end; i++) labels[i] = `I-${span.tag}`;
  }
  return labels;
}
