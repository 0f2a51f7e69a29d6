import { createInterface } from "node:readline";
import { DictionaryModel } from "./dictionary.js";
import { decodeRequest, DecodeRequest } from "./decoder.js";

const PROTOCOL_VERSION = 1;

/**
 * Request/response loop over newline-delimited JSON on stdin/stdout.
 *
 * Messages: {"type":"hello","protocol":1} opens the stream (echoed back),
 * {"type":"decode",...} asks for one decode, {"type":"shutdown"} ends the
 * loop. Malformed lines get an error reply and the loop continues.
 */
export async function serve(
  dictionary: DictionaryModel,
  input: NodeJS.ReadableStream = process.stdin,
  output: NodeJS.WritableStream = process.stdout,
): Promise<void> {
  const reply = (message: object) => output.write(JSON.stringify(message) + "\n");
  const rl = createInterface({ input });
  for await (const line of rl) {
    if (!line.trim()) continue;
    let message: Record<string, unknown>;
    try {
      message = JSON.parse(line);
    } catch {
      reply({ type: "error", message: "unparseable JSON line" });
      continue;
    }
    switch (message.type) {
      case "hello":
        reply({ type: "hello", protocol: PROTOCOL_VERSION });
        break;
      case "shutdown":
        rl.close();
        return;
      case "decode": {
        try {
          const request = message as unknown as DecodeRequest;
          const result = decodeRequest(request, dictionary);
          reply({
            type: "result",
            session: request.session,
            transcript: result.transcript,
            translation: result.translation,
            score: result.score,
          });
        } catch (err) {
          reply({ type: "error", message: String(err) });
        }
        break;
      }
      default:
        reply({ type: "error", message: `unknown message type ${JSON.stringify(message.type)}` });
    }
  }
}
