/**
 * Client for the cfgmask HTTP service: engine lifecycle (create, mask,
 * accept, reset) over a running server.
 *
 * Masks come back as raw bytes in the wire layout: bit (id % 8) of byte
 * (id / 8) is set when token id is a legal continuation.
 */

export interface EngineOptions {
  prune?: boolean;
  ciCache?: boolean;
  trie?: boolean;
  stateCache?: boolean;
}

export interface Vocabulary {
  eosId: number;
  /** Dense token id -> byte sequence; the EOS entry must be empty. */
  tokens: Uint8Array[];
}

export interface EngineHandle {
  engineId: string;
  vocabSize: number;
}

export interface MaskInfo {
  mask: Uint8Array;
  allowed: number;
  fingerprint: string;
  accepting: boolean;
  finished: boolean;
}

export function hexToBytes(hex: string): Uint8Array {
  if (hex.length % 2 !== 0) throw new Error(`odd-length hex string: ${hex.length}`);
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    const byte = Number.parseInt(hex.slice(2 * i, 2 * i + 2), 16);
    if (Number.isNaN(byte)) throw new Error(`bad hex at offset ${2 * i}`);
    out[i] = byte;
  }
  return out;
}

export function bytesToHex(bytes: Uint8Array): string {
  let out = "";
  for (const b of bytes) out += b.toString(16).padStart(2, "0");
  return out;
}

/** True when the mask allows the given token id. */
export function maskBit(mask: Uint8Array, tokenId: number): boolean {
  const byte = mask[tokenId >> 3];
  return byte !== undefined && (byte & (1 << (tokenId & 7))) !== 0;
}

/** All token ids the mask allows, ascending. */
export function allowedTokens(mask: Uint8Array, vocabSize: number): number[] {
  const ids: number[] = [];
  for (let i = 0; i < vocabSize; i++) {
    if (maskBit(mask, i)) ids.push(i);
  }
  return ids;
}

export class CfgmaskError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`cfgmask service error ${status}: ${detail}`);
  }
}

function toBase64(bytes: Uint8Array): string {
  let binary = "";
  for (const b of bytes) binary += String.fromCharCode(b);
  return btoa(binary);
}

export class EngineClient {
  constructor(readonly baseUrl: string) {}

  private async request(method: string, path: string, body?: unknown): Promise<any> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    if (!resp.ok) throw new CfgmaskError(resp.status, text);
    return text ? JSON.parse(text) : null;
  }

  /** Create an engine from grammar text and a vocabulary. */
  async create(
    grammar: string,
    vocab: Vocabulary,
    options?: EngineOptions,
    start = "start",
  ): Promise<EngineHandle> {
    const tokens: Record<string, string> = {};
    vocab.tokens.forEach((tok, id) => {
      tokens[String(id)] = toBase64(tok);
    });
    const body: Record<string, unknown> = {
      grammar,
      start,
      vocab: { eos_id: vocab.eosId, tokens },
    };
    if (options) {
      body.options = {
        prune: options.prune ?? true,
        ci_cache: options.ciCache ?? true,
        trie: options.trie ?? true,
        state_cache: options.stateCache ?? true,
      };
    }
    const data = await this.request("POST", "/engines", body);
    return { engineId: data.engine_id, vocabSize: data.vocab_size };
  }

  /** Current token mask as raw bytes (CLI wire layout). */
  async mask(handle: EngineHandle): Promise<Uint8Array> {
    return (await this.maskInfo(handle)).mask;
  }

  /** Mask plus the state metadata the service reports alongside it. */
  async maskInfo(handle: EngineHandle): Promise<MaskInfo> {
    const data = await this.request("GET", `/engines/${handle.engineId}/mask`);
    return {
      mask: hexToBytes(data.mask_hex),
      allowed: data.allowed,
      fingerprint: data.fingerprint,
      accepting: data.accepting,
      finished: data.finished,
    };
  }

  /** Advance by one token id; false means rejected and state unchanged. */
  async accept(handle: EngineHandle, tokenId: number): Promise<boolean> {
    const data = await this.request("POST", `/engines/${handle.engineId}/accept`, {
      token_id: tokenId,
    });
    return data.accepted;
  }

  /** Return the engine to its initial state, keeping grammar-level caches. */
  async reset(handle: EngineHandle): Promise<void> {
    await this.request("POST", `/engines/${handle.engineId}/reset`);
  }

  /** Free the engine on the server. */
  async close(handle: EngineHandle): Promise<void> {
    await this.request("DELETE", `/engines/${handle.engineId}`);
  }
}
