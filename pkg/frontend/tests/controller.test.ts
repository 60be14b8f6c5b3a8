import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { CandidateController } from "../src/controller.js";
import { AnnotationSession } from "../src/session.js";

const TOKENS = ["revenue", "of", "7,782"];

function fakeService(behaviour: {
  candidates?: { tag: string; probability: number }[];
  delayMs?: (call: number) => number;
  fingerprint?: string;
}) {
  let calls = 0;
  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    if (url.endsWith("/healthz")) {
      return jsonResponse({ status: "ok", model_fingerprint: behaviour.fingerprint ?? "fp-1" });
    }
    if (url.endsWith("/api/recommend")) {
      const call = ++calls;
      const body = JSON.parse(String(init?.body ?? "{}"));
      if (behaviour.delayMs) await sleep(behaviour.delayMs(call));
      return jsonResponse({
        candidates: behaviour.candidates ?? [
          { tag: `Tag${call}`, probability: 0.5 },
          { tag: "Other", probability: 0.25 },
        ],
        policy_view: `view-${body.index}-${call}`,
      });
    }
    return jsonResponse({ error: { code: "not_found", message: url } }, 404);
  };
  return { fetchImpl, calls: () => calls };
}

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

describe("CandidateController", () => {
  it("renders the service ordering byte-for-byte", async () => {
    const unsorted = [
      { tag: "Zeta", probability: 0.2 },
      { tag: "Alpha", probability: 0.7 },
      { tag: "Mid", probability: 0.1 },
    ];
    const service = fakeService({ candidates: unsorted });
    const session = new AnnotationSession(TOKENS);
    const controller = new CandidateController(new ApiClient("http://svc", service.fetchImpl), session);
    const panel = await controller.requestCandidates(2);
    expect(panel?.candidates).toEqual(unsorted);
  });

  it("serves repeat clicks from the cache without a second call", async () => {
    const service = fakeService({});
    const session = new AnnotationSession(TOKENS);
    const controller = new CandidateController(new ApiClient("http://svc", service.fetchImpl), session);
    const first = await controller.requestCandidates(2);
    const second = await controller.requestCandidates(2);
    expect(service.calls()).toBe(1);
    expect(first?.fromCache).toBe(false);
    expect(second?.fromCache).toBe(true);
    expect(second?.candidates).toEqual(first?.candidates);
  });

  it("discards superseded responses by request id", async () => {
    // first request resolves slower than the second
    const service = fakeService({ delayMs: (call) => (call === 1 ? 30 : 1) });
    const session = new AnnotationSession(TOKENS);
    const controller = new CandidateController(new ApiClient("http://svc", service.fetchImpl), session);
    const [first, second] = await Promise.all([
      controller.requestCandidates(1),
      controller.requestCandidates(1),
    ]);
    expect(first).toBeNull(); // superseded
    expect(second?.candidates[0].tag).toBe("Tag2");
    expect(session.cachedCandidates(1)?.candidates[0].tag).toBe("Tag2");
  });

  it("propagates service errors without touching the session", async () => {
    const failingFetch = async (): Promise<Response> =>
      jsonResponse({ error: { code: "internal_error", message: "boom" } }, 500);
    const session = new AnnotationSession(TOKENS);
    session.acceptTag(0, "Revenues");
    const labelsBefore = session.labels;
    const controller = new CandidateController(new ApiClient("http://svc", failingFetch), session);
    await expect(controller.requestCandidates(1)).rejects.toMatchObject({
      status: 500,
      code: "internal_error",
    });
    expect(session.labels).toEqual(labelsBefore);
  });

  it("syncFingerprint marks older cache entries stale", async () => {
    let fingerprint = "fp-1";
    const fetchImpl = async (url: string): Promise<Response> => {
      if (url.endsWith("/healthz")) {
        return jsonResponse({ status: "ok", model_fingerprint: fingerprint });
      }
      return jsonResponse({
        candidates: [{ tag: "Revenues", probability: 1 }],
        policy_view: "v",
      });
    };
    const session = new AnnotationSession(TOKENS);
    const controller = new CandidateController(new ApiClient("http://svc", fetchImpl), session);
    await controller.syncFingerprint();
    await controller.requestCandidates(0);
    expect(session.cachedCandidates(0)).toBeDefined();
    fingerprint = "fp-2";
    await controller.syncFingerprint();
    expect(session.cachedCandidates(0)).toBeUndefined();
  });
});
