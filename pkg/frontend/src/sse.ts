export interface SseEvent {
  event: string;
  data: string;
}

/**
 * Incremental server-sent-events parser. Feed it text in arbitrary chunk
 * sizes; it returns the events completed by each chunk. Comment lines
 * (keep-alives) are dropped, multi-line data is joined with newlines, and
 * an event dispatches only when a blank line closes a non-empty data
 * buffer, per the SSE processing model.
 */
export class SseParser {
  private buf = "";
  private eventName = "";
  private dataLines: string[] = [];

  push(chunk: string): SseEvent[] {
    this.buf += chunk;
    const out: SseEvent[] = [];
    for (;;) {
      const nl = this.buf.indexOf("\n");
      if (nl < 0) break;
      let line = this.buf.slice(0, nl);
      this.buf = this.buf.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line === "") {
        if (this.dataLines.length) {
          out.push({ event: this.eventName || "message", data: this.dataLines.join("\n") });
        }
        this.eventName = "";
        this.dataLines = [];
        continue;
      }
      if (line.startsWith(":")) continue;
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      let value = colon < 0 ? "" : line.slice(colon + 1);
      if (value.startsWith(" ")) value = value.slice(1);
      if (field === "event") this.eventName = value;
      else if (field === "data") this.dataLines.push(value);
      // id and retry fields are not used by this protocol
    }
    return out;
  }
}

export async function* sseEvents(body: ReadableStream<Uint8Array>): AsyncGenerator<SseEvent> {
  const parser = new SseParser();
  const decoder = new TextDecoder();
  const reader = body.getReader();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const ev of parser.push(decoder.decode(value, { stream: true }))) yield ev;
    }
    for (const ev of parser.push(decoder.decode())) yield ev;
  } finally {
    reader.releaseLock();
  }
}
