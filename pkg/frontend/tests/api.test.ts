import { describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("ApiClient", () => {
  it("createCase posts the image bytes to /cases", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ id: "abc", state: "created" }, 201));
    const client = new ApiClient("http://engine", fetchFn as unknown as typeof fetch);
    const created = await client.createCase(new Uint8Array([1, 2, 3]));
    expect(created.id).toBe("abc");
    const [url, init] = fetchFn.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://engine/cases");
    expect(init.method).toBe("POST");
    expect(init.body).toBeInstanceOf(Uint8Array);
  });

  it("performAction hits the documented transition endpoint", async () => {
    const fetchFn = vi.fn(async () => jsonResponse({ id: "abc", state: "initial_analyzed" }));
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    await client.performAction("abc", "analyze");
    expect((fetchFn.mock.calls[0] as unknown as [string])[0]).toBe("/cases/abc/analyze");
  });

  it("surfaces an illegal transition as ApiError with status 409", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ detail: "illegal transition: xai from created" }, 409),
    );
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    const err = await client.performAction("abc", "xai").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).detail).toContain("illegal transition");
  });

  it("getReport parses the report body", async () => {
    const fetchFn = vi.fn(async () =>
      jsonResponse({ id: "abc", state: "created", legal_actions: ["analyze"], artifacts: {} }),
    );
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    const report = await client.getReport("abc");
    expect(report.legal_actions).toEqual(["analyze"]);
  });

  it("imageUrl points at the image endpoint on the configured base", () => {
    const client = new ApiClient("http://engine");
    expect(client.imageUrl("abc")).toBe("http://engine/cases/abc/image");
  });

  it("eval run start + poll use the run endpoints", async () => {
    const fetchFn = vi
      .fn()
      .mockResolvedValueOnce(jsonResponse({ run_id: "r1", status: "running", completed: 0, total: 73 }, 202))
      .mockResolvedValueOnce(jsonResponse({ run_id: "r1", status: "done", completed: 73, total: 73 }));
    const client = new ApiClient("", fetchFn as unknown as typeof fetch);
    const run = await client.startEvalRun("fixtures/eval_corpus", "fixtures/expert_reviews.csv");
    expect(run.run_id).toBe("r1");
    const state = await client.getEvalRun(run.run_id);
    expect(state.status).toBe("done");
    const firstInit = (fetchFn.mock.calls[0] as unknown as [string, RequestInit])[1];
    expect(JSON.parse(firstInit.body as string)).toEqual({
      corpus: "fixtures/eval_corpus",
      reviews: "fixtures/expert_reviews.csv",
    });
    expect((fetchFn.mock.calls[1] as unknown as [string])[0]).toBe("/eval/runs/r1");
  });
});
