import { DictionaryModel } from "./dictionary.js";
import { freshState, nextStream, StreamName } from "./schedule.js";

export interface SourceChunk {
  t0: number;
  t1: number;
  tokens: string[];
}

export interface DecodeRequest {
  session: string;
  gamma: number;
  beam: number;
  max_tokens: number;
  source_chunks: SourceChunk[];
  forced_transcript: string[];
  forced_translation: string[];
}

export interface DecodeResult {
  transcript: string[];
  translation: string[];
  /** Tokens in generation order, for inspection/tests. */
  interleaved: { text: string; stream: StreamName }[];
  score: number;
}

/**
 * One stateless decode: echo the revealed source tokens as the transcript,
 * translate them word-by-word for the translation, pin the forced prefixes,
 * and emit token-by-token in the order the scheduling inequality dictates.
 */
export function decodeRequest(req: DecodeRequest, dictionary: DictionaryModel): DecodeResult {
  const revealed = req.source_chunks.flatMap((c) => c.tokens);
  const naturalTranscript = [...revealed];
  const naturalTranslation = revealed.map((t) => dictionary.translate(t));

  const transcript = [...req.forced_transcript, ...naturalTranscript.slice(req.forced_transcript.length)].slice(
    0,
    req.max_tokens,
  );
  const translation = [
    ...req.forced_translation,
    ...naturalTranslation.slice(req.forced_translation.length),
  ].slice(0, req.max_tokens);

  const interleaved: { text: string; stream: StreamName }[] = [];
  const state = freshState();
  state.stDone = transcript.length === 0;
  state.ttDone = translation.length === 0;
  let i = 0;
  let j = 0;
  while (!(state.stDone && state.ttDone)) {
    const choice = nextStream(state, req.gamma);
    if (choice === "transcript") {
      interleaved.push({ text: transcript[i]!, stream: "transcript" });
      state.countSt += 1;
      i += 1;
      if (i === transcript.length) state.stDone = true;
    } else {
      interleaved.push({ text: translation[j]!, stream: "translation" });
      state.countTt += 1;
      j += 1;
      if (j === translation.length) state.ttDone = true;
    }
  }

  return { transcript, translation, interleaved, score: 0.0 };
}
