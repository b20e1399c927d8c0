// Minimal reader for the server's event-stream responses
// ("event: <name>\ndata: <json>\n\n" frames).

export interface SseEvent {
  name: string;
  data: any;
}

function drainFrames(buffer: string, onEvent: (event: SseEvent) => void): string {
  let rest = buffer;
  for (;;) {
    const cut = rest.indexOf("\n\n");
    if (cut < 0) return rest;
    const frame = rest.slice(0, cut);
    rest = rest.slice(cut + 2);
    const match = /^event: (.+)\ndata: (.*)$/s.exec(frame);
    if (match) onEvent({ name: match[1], data: JSON.parse(match[2]) });
  }
}

export async function readSse(
  response: Response,
  onEvent: (event: SseEvent) => void,
): Promise<void> {
  const body = response.body;
  if (body && typeof body.getReader === "function") {
    const reader = body.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      buffer = drainFrames(buffer, onEvent);
    }
    buffer += decoder.decode();
    drainFrames(buffer, onEvent);
    return;
  }
  // environments without readable-stream responses get the buffered events
  drainFrames(await response.text(), onEvent);
}
