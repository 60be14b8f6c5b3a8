/**
 * Candidate-request orchestration: cache first, at most one in-flight
 * request per token index, stale responses discarded by request id.
 */

import { ApiClient, Candidate } from "./api.js";
import { AnnotationSession } from "./session.js";

export interface CandidatePanel {
  index: number;
  candidates: Candidate[];
  policyView: string;
  fromCache: boolean;
}

export class CandidateController {
  private sequence = new Map<number, number>();

  constructor(
    private readonly client: ApiClient,
    private readonly session: AnnotationSession,
  ) {}

  /**
   * Fetch (or reuse) the top-k candidates for one token. Returns null when a
   * newer request for the same token superseded this one.
   */
  async requestCandidates(index: number): Promise<CandidatePanel | null> {
    const cached = this.session.cachedCandidates(index);
    if (cached) {
      return {
        index,
        candidates: cached.candidates,
        policyView: cached.policyView,
        fromCache: true,
      };
    }
    const id = (this.sequence.get(index) ?? 0) + 1;
    this.sequence.set(index, id);
    const response = await this.client.recommend(this.session.tokens, index, this.session.k);
    if (this.sequence.get(index) !== id) return null; // superseded
    this.session.storeCandidates(index, response.candidates, response.policy_view);
    return {
      index,
      candidates: response.candidates,
      policyView: response.policy_view,
      fromCache: false,
    };
  }

  /** Refresh the model fingerprint, marking mismatched cache entries stale. */
  async syncFingerprint(): Promise<string> {
    const health = await this.client.health();
    this.session.setModelFingerprint(health.model_fingerprint);
    return health.model_fingerprint;
  }
}
