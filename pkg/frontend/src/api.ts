import { sseEvents } from "./sse.js";
import type { GenerationRecord, NetworkDoc, SessionState } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly errors: Record<string, string> = {},
  ) {
    super(message);
    this.name = "ApiError";
  }
}

const JSON_HEADERS = { "content-type": "application/json" };

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const res = await fetch(url, init);
  const text = await res.text();
  let body: unknown = null;
  if (text) {
    try {
      body = JSON.parse(text);
    } catch {
      body = text;
    }
  }
  if (!res.ok) {
    const doc = body as { errors?: Record<string, string>; detail?: unknown } | null;
    const errors = doc && typeof doc === "object" && doc.errors ? doc.errors : {};
    const detail = doc && typeof doc === "object" && doc.detail !== undefined ? doc.detail : res.statusText;
    throw new ApiError(res.status, String(detail), errors);
  }
  return body as T;
}

function sleep(ms: number, signal?: AbortSignal): Promise<void> {
  return new Promise((resolve) => {
    const t = setTimeout(done, ms);
    function done() {
      signal?.removeEventListener("abort", done);
      clearTimeout(t);
      resolve();
    }
    signal?.addEventListener("abort", done);
  });
}

export class Client {
  constructor(readonly base = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  createSession(config: Record<string, unknown> = {}): Promise<{ run_id: string; state: SessionState }> {
    return request(this.url("/sessions"), {
      method: "POST",
      headers: JSON_HEADERS,
      body: JSON.stringify(config),
    });
  }

  getState(runId: string): Promise<SessionState> {
    return request(this.url(`/sessions/${runId}`));
  }

  patchConfig(runId: string, patch: Record<string, unknown>): Promise<SessionState> {
    return request(this.url(`/sessions/${runId}/config`), {
      method: "PATCH",
      headers: JSON_HEADERS,
      body: JSON.stringify(patch),
    });
  }

  step(runId: string, n = 1): Promise<SessionState> {
    return request(this.url(`/sessions/${runId}/step`), {
      method: "POST",
      headers: JSON_HEADERS,
      body: JSON.stringify({ n_generations: n }),
    });
  }

  pause(runId: string): Promise<SessionState> {
    return request(this.url(`/sessions/${runId}/pause`), { method: "POST" });
  }

  resume(runId: string): Promise<SessionState> {
    return request(this.url(`/sessions/${runId}/resume`), { method: "POST" });
  }

  getRecords(runId: string, from = 1): Promise<GenerationRecord[]> {
    return request(this.url(`/sessions/${runId}/records?from=${from}`));
  }

  getNetwork(runId: string): Promise<NetworkDoc> {
    return request(this.url(`/sessions/${runId}/network`));
  }

  /**
   * Deliver generation records in order, exactly once, starting at `from`,
   * until the session finishes. Disconnects are retried with exponential
   * backoff and any gap is healed from the records endpoint first, so the
   * consumer sees a contiguous series across reconnects.
   */
  async streamRecords(
    runId: string,
    from: number,
    onRecord: (rec: GenerationRecord) => void,
    signal?: AbortSignal,
  ): Promise<void> {
    let next = from;
    let delay = 250;

    const deliver = (rec: GenerationRecord) => {
      if (rec.generation >= next) {
        onRecord(rec);
        next = rec.generation + 1;
      }
    };
    const catchUp = async (upTo?: number) => {
      const missed = await this.getRecords(runId, next);
      for (const rec of missed) {
        if (upTo === undefined || rec.generation < upTo) deliver(rec);
      }
    };

    while (!signal?.aborted) {
      try {
        const res = await fetch(this.url(`/sessions/${runId}/stream?from=${next}`), {
          headers: { accept: "text/event-stream" },
          signal,
        });
        if (!res.ok || !res.body) throw new ApiError(res.status, "stream rejected");
        delay = 250;
        for await (const ev of sseEvents(res.body)) {
          if (ev.event !== "generation") continue;
          const rec = JSON.parse(ev.data) as GenerationRecord;
          if (rec.generation > next) await catchUp(rec.generation);
          deliver(rec);
        }
        // server closes the stream only once the session has finished
        const state = await this.getState(runId);
        if (state.mode === "finished") {
          await catchUp();
          return;
        }
        throw new Error("stream ended before the session finished");
      } catch (err) {
        if (signal?.aborted) return;
        await sleep(delay, signal);
        delay = Math.min(delay * 2, 4000);
        try {
          await catchUp();
        } catch {
          // still unreachable; the next loop turn retries the stream
        }
      }
    }
  }
}
