/**
 * Annotation session state machine (DOM-free, fully unit-testable).
 *
 * The working labels are IOB2-valid at every point: every mutation goes
 * through span algebra that rejects overlap and reconstructs labels from
 * spans, and undo restores exact prior snapshots.
 */

import { Candidate } from "./api.js";
import { labelsFromSpans, spansFromLabels, Span, validateIob2 } from "./iob2.js";

export interface AcceptResult {
  ok: boolean;
  warning?: string;
}

export interface CachedCandidates {
  candidates: Candidate[];
  policyView: string;
  stale: boolean;
}

export const DEFAULT_K = 10;

export class AnnotationSession {
  readonly tokens: string[];
  private labels_: string[];
  private undoStack: string[][] = [];
  private cache = new Map<string, CachedCandidates>();
  private fingerprint = "";
  k: number = DEFAULT_K;
  dirty = false;
  docId: string;
  periodIndex: number;

  constructor(tokens: string[], docId = "annotation-session", periodIndex = 0) {
    if (tokens.length === 0) throw new Error("session needs at least one token");
    if (tokens.some((t) => t.length === 0)) throw new Error("tokens must be non-empty");
    this.tokens = [...tokens];
    this.labels_ = new Array<string>(tokens.length).fill("O");
    this.docId = docId;
    this.periodIndex = periodIndex;
  }

  /** Current working labels (defensive copy; always IOB2-valid). */
  get labels(): string[] {
    return [...this.labels_];
  }

  get spans(): Span[] {
    return spansFromLabels(this.labels_);
  }

  get canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  /**
   * Apply a tag to [index, index+extent). Overlapping an existing span is a
   * warning (no state change) unless replace is set, in which case the
   * overlapped spans are removed first.
   */
  acceptTag(index: number, tag: string, extent = 1, replace = false): AcceptResult {
    const end = index + extent;
    if (index < 0 || extent < 1 || end > this.tokens.length) {
      return { ok: false, warning: `span [${index}, ${end}) is out of range` };
    }
    if (!tag || tag === "O") {
      return { ok: false, warning: "cannot annotate with an empty tag" };
    }
    const existing = this.spans;
    const overlapping = existing.filter((s) => s.start < end && index < s.end);
    if (overlapping.length > 0 && !replace) {
      const what = overlapping.map((s) => `${s.tag}[${s.start},${s.end})`).join(", ");
      return { ok: false, warning: `span overlaps ${what}; use replace to override` };
    }
    const kept = existing.filter((s) => !(s.start < end && index < s.end));
    kept.push({ start: index, end, tag });
    const next = labelsFromSpans(kept, this.tokens.length);
    this.push(next);
    return { ok: true };
  }

  /** Remove the span covering the given token, if any. */
  clearSpanAt(index: number): AcceptResult {
    const existing = this.spans;
    const kept = existing.filter((s) => !(s.start <= index && index < s.end));
    if (kept.length === existing.length) {
      return { ok: false, warning: "no span at this token" };
    }
    this.push(labelsFromSpans(kept, this.tokens.length));
    return { ok: true };
  }

  undo(): boolean {
    const prior = this.undoStack.pop();
    if (!prior) return false;
    this.labels_ = prior;
    this.dirty = this.undoStack.length > 0;
    return true;
  }

  private push(next: string[]): void {
    const violations = validateIob2(next);
    if (violations.length > 0) {
      // unreachable by construction; refuse rather than hold invalid state
      throw new Error(`internal error: produced invalid labels (${violations[0].kind})`);
    }
    this.undoStack.push(this.labels_);
    this.labels_ = next;
    this.dirty = true;
  }

  // -- candidate cache, keyed by (token index, k, model fingerprint) --------

  /** Mark cache entries from other model versions stale. */
  setModelFingerprint(fingerprint: string): void {
    if (fingerprint === this.fingerprint) return;
    this.fingerprint = fingerprint;
    for (const [key, entry] of this.cache) {
      if (!key.endsWith(`@${fingerprint}`)) entry.stale = true;
    }
  }

  get modelFingerprint(): string {
    return this.fingerprint;
  }

  private cacheKey(index: number, k: number, fingerprint: string): string {
    return `${index}#${k}@${fingerprint}`;
  }

  cachedCandidates(index: number): CachedCandidates | undefined {
    const entry = this.cache.get(this.cacheKey(index, this.k, this.fingerprint));
    return entry && !entry.stale ? entry : undefined;
  }

  storeCandidates(index: number, candidates: Candidate[], policyView: string): void {
    this.cache.set(this.cacheKey(index, this.k, this.fingerprint), {
      candidates: [...candidates], // service order preserved, never re-sorted
      policyView,
      stale: false,
    });
  }

  /** One corpus-format record; identical bytes for identical state. */
  exportRecord(): string {
    return JSON.stringify({
      tokens: this.tokens,
      labels: this.labels_,
      doc_id: this.docId,
      period_index: this.periodIndex,
    });
  }
}
